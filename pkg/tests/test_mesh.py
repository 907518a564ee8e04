import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from facetdg.mesh import (Mesh, MeshTopologyError, build_structured_triangular,
                          extract_facets, mesh_quality_report)


@settings(deadline=None, max_examples=8)
@given(st.integers(min_value=1, max_value=9))
def test_structured_counts(n):
    # Euler-style counts for an n x n criss-cross-free grid split into two
    # triangles per cell: edges = 3 n^2 + 2 n, of which 4 n lie on the boundary
    mesh = build_structured_triangular(n)
    assert len(mesh.vertices) == (n + 1) ** 2
    assert mesh.n_elements == 2 * n ** 2
    assert mesh.n_facets == 3 * n ** 2 + 2 * n
    assert int(mesh.boundary_mask.sum()) == 4 * n


def test_total_area_and_diameters():
    mesh = build_structured_triangular(5)
    assert mesh.areas.sum() == pytest.approx(1.0, abs=1e-14)
    assert mesh.diameters.max() == pytest.approx(np.sqrt(2) / 5, abs=1e-14)


def test_normals_point_away_from_first_owner():
    mesh = build_structured_triangular(4)
    for f in range(mesh.n_facets):
        k1 = mesh.f_elems[f, 0]
        assert np.dot(mesh.f_normal[f], mesh.f_midpoint[f] - mesh.centroids[k1]) > 0
        assert np.linalg.norm(mesh.f_normal[f]) == pytest.approx(1.0, abs=1e-14)


def test_facet_parameterization_agrees_across_sides():
    # the same arclength parameter must land on the same physical point when
    # mapped through either owner's reference coordinates
    mesh = build_structured_triangular(3)
    s = np.array([0.0, 0.3, 0.77, 1.0])
    X = mesh.facet_points(s)
    verts = mesh.vertices[mesh.elements]
    for f in np.nonzero(~mesh.boundary_mask)[0]:
        for side in (0, 1):
            e = mesh.f_elems[f, side]
            r = mesh.facet_ref_points(f, side, s)
            p0 = verts[e, 0]
            J = np.stack([verts[e, 1] - p0, verts[e, 2] - p0], axis=1)
            phys = p0 + r @ J.T
            assert np.allclose(phys, X[f], atol=1e-14)


def test_elem_facets_closure():
    mesh = build_structured_triangular(4)
    for e in range(mesh.n_elements):
        fids = mesh.elem_facets[e]
        assert len(set(fids)) == 3
        for fid in fids:
            assert e in mesh.f_elems[fid]


def test_clockwise_element_rejected():
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(MeshTopologyError):
        Mesh(vertices=verts, elements=np.array([[0, 2, 1]]))


def test_non_manifold_edge_rejected():
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, 1.0], [0.5, -1.0], [1.5, 0.5]])
    els = np.array([[0, 1, 2], [0, 3, 1], [0, 1, 4]])
    with pytest.raises(MeshTopologyError, match="non-manifold"):
        Mesh(vertices=verts, elements=els)


def test_json_roundtrip():
    mesh = build_structured_triangular(3)
    clone = Mesh.from_json(mesh.to_json())
    assert np.array_equal(clone.vertices, mesh.vertices)
    assert np.array_equal(clone.elements, mesh.elements)
    assert np.array_equal(clone.f_vertices, mesh.f_vertices)


def test_extract_facets_matches_arrays():
    mesh = build_structured_triangular(2)
    facets = extract_facets(mesh)
    assert len(facets) == mesh.n_facets
    g = facets[0]
    assert g.measure == pytest.approx(mesh.f_measure[0])
    assert g.is_boundary == bool(mesh.boundary_mask[0])


def test_quality_report_structured():
    mesh = build_structured_triangular(6)
    rep = mesh_quality_report(mesh)
    # right isoceles triangle, legs 1/6: perimeter (2 + sqrt 2) h_leg,
    # diameter sqrt(2) h_leg, area h_leg^2 / 2
    expect = (2 + np.sqrt(2)) * np.sqrt(2) * 2
    assert rep["max_shape_ratio"] == pytest.approx(expect, rel=1e-12)
    assert np.all(rep["shape_ratio"] > 0)
    assert rep["max_nonconformity_ratio"] > 0
