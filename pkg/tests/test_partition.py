import numpy as np
import pytest

from facetdg.mesh import build_structured_triangular
from facetdg.partition import (BoundaryClass, ClassificationError,
                               FacetPartition, InteriorClass, classify,
                               compute_A_Lambda, dominance_split, epsilon_df)
from facetdg.problem import (builtin_problem, constant_field, scalar_field,
                             tensor_field)


def test_pure_diffusion_all_diffusive():
    mesh = build_structured_triangular(4)
    part = classify(mesh, builtin_problem("pure_diffusion"))
    counts = part.interior_counts()
    assert counts["DF_DF_DFD"] == int((~mesh.boundary_mask).sum())
    assert part.boundary_counts()["DF_D"] == 16
    # unit diffusion everywhere: A_Lambda = 1 on every diffusive facet
    assert np.allclose(part.A_lambda[part.df_interior], 1.0)
    assert np.allclose(part.eps_df, 1.0)


def test_advection_dominated_switches_with_mesh_size():
    # h |u.n| < A_Lambda decides dominance; with eps = 1e-2 and |u.n| up to
    # 1/sqrt(2) the diagonal facets are advection-dominated on coarse meshes
    p = builtin_problem("advection_dominated", eps=1e-2)
    part = classify(build_structured_triangular(4), p)
    counts = part.interior_counts()
    assert counts["AD_AD"] == 0
    # axis-aligned interior facets see |u.n| = 1/sqrt(2), so
    # 0.25/sqrt(2) > eps makes them advection-dominated; the 16 diagonal
    # facets are tangential to u (u.n = 0) and stay diffusion-dominated
    assert counts["DF_DF_ADD"] == 24
    assert counts["DF_DF_DFD"] == 16


def test_degenerate_interface_counts_n8():
    # left block is an 4x8 sub-grid: 3*32 + 4 + 8 = 108 edges, 24 on its
    # boundary, so 84 fully-elliptic interior facets; mirrored hyperbolic
    # side; 8 shared interface facets with u tangent -> outflow-signed class
    mesh = build_structured_triangular(8)
    part = classify(mesh, builtin_problem("degenerate_interface"))
    assert part.interior_counts() == {
        "DF_DF_DFD": 84, "DF_DF_ADD": 0,
        "AD_DF_PLUS": 8, "AD_DF_MINUS": 0, "AD_AD": 84,
    }
    assert part.boundary_counts() == {
        "DF_D": 16, "DF_N_MINUS": 0, "DF_N_PLUS": 0,
        "AD_MINUS": 4, "AD_PLUS": 12,
    }
    iface = part.interior_class == InteriorClass.AD_DF_PLUS
    assert np.allclose(mesh.f_midpoint[iface, 0], 0.5)
    # one-sided normal diffusion: elliptic owner contributes 1, other side 0
    a = part.A_side[iface]
    assert np.all(np.nansum(a, axis=1) == 1.0)


def test_eps_df_extends_across_interface():
    # hyperbolic elements touching the interface carry no volume diffusion,
    # and none of their facets is a diffusive facet, so eps_df = 0 there
    mesh = build_structured_triangular(8)
    p = builtin_problem("degenerate_interface")
    part = classify(mesh, p)
    left = mesh.centroids[:, 0] < 0.5
    assert np.allclose(part.eps_df[left], 1.0)
    assert np.allclose(part.eps_df[~left], 0.0)
    assert epsilon_df(mesh, p, int(np.nonzero(left)[0][0])) == 1.0


def test_dominance_split_rule():
    assert dominance_split(0.1, np.array([0.5, -0.3]), 1.0) == "dfd"
    assert dominance_split(0.1, np.array([0.5, 20.0]), 1.0) == "add"
    # boundary of the inequality is strict
    assert dominance_split(1.0, np.array([1.0]), 1.0) == "add"


def test_compute_A_Lambda_mean_of_sides():
    mesh = build_structured_triangular(2)
    p = builtin_problem("pure_diffusion")
    fid = int(np.nonzero(~mesh.boundary_mask)[0][0])
    assert compute_A_Lambda(mesh, p, fid) == pytest.approx(1.0)
    p2 = builtin_problem("degenerate_interface")
    bad = int(np.nonzero(classify(mesh, p2).interior_class == InteriorClass.AD_DF_PLUS)[0][0])
    with pytest.raises(ValueError):
        compute_A_Lambda(mesh, p2, bad)


def test_mixed_sign_facet_raises():
    # normal diffusion changes sign along facets crossing x = 0.3, which no
    # mesh line matches: classification must refuse, not mislabel
    p = builtin_problem("pure_diffusion")
    p.A = tensor_field(lambda pts: np.einsum(
        "n,ab->nab", np.maximum(pts[:, 0] - 0.3, 0.0), np.eye(2)))
    with pytest.raises(ClassificationError, match="mixed-sign"):
        classify(build_structured_triangular(4), p)


def test_neumann_and_outflow_boundary_classes():
    p = builtin_problem("pure_diffusion")
    p.u = constant_field([1.0, 0.0])
    p.dirichlet_predicate = lambda pts: np.atleast_2d(pts)[:, 0] < 0.5
    part = classify(build_structured_triangular(4), p)
    c = part.boundary_counts()
    # x = 0 edge: Dirichlet; x = 1 edge: Neumann outflow; y = 0 and y = 1
    # edges split at x = 0.5 between Dirichlet and tangential (u.n = 0) Neumann
    assert c["DF_D"] == 8
    assert c["DF_N_MINUS"] == 0
    assert c["DF_N_PLUS"] == 8
    assert c["AD_MINUS"] == c["AD_PLUS"] == 0


def test_dfd_inflow_flag():
    p = builtin_problem("pure_diffusion")
    p.u = constant_field([1.0, 0.0])
    mesh = build_structured_triangular(4)
    part = classify(mesh, p)
    on_left = np.isclose(mesh.f_midpoint[:, 0], 0.0)
    assert np.all(part.dfd_inflow[on_left & part.df_dirichlet])
    on_right = np.isclose(mesh.f_midpoint[:, 0], 1.0)
    assert not np.any(part.dfd_inflow[on_right])
