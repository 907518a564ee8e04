import numpy as np
import pytest

from facetdg.mesh import build_structured_triangular
from facetdg.quadrature import triangle_rule
from facetdg.space import DGSpace, ReferenceBasis


@pytest.mark.parametrize("degree", [1, 2, 3, 4])
def test_reference_basis_orthonormal(degree):
    basis = ReferenceBasis(degree)
    rule = triangle_rule(2 * degree + 2)
    V = basis.eval(rule.points)
    gram = V.T @ (rule.weights[:, None] * V)
    assert np.allclose(gram, np.eye(basis.n_basis), atol=1e-13)


@pytest.mark.parametrize("degree", [1, 3])
def test_reference_gradients_match_finite_differences(degree):
    basis = ReferenceBasis(degree)
    rng = np.random.default_rng(4)
    pts = rng.uniform(0.1, 0.4, size=(10, 2))
    h = 1e-6
    g = basis.eval_grad(pts)
    for a, e in enumerate(np.eye(2)):
        fd = (basis.eval(pts + h * e) - basis.eval(pts - h * e)) / (2 * h)
        assert np.allclose(g[:, :, a], fd, atol=1e-8)
    H = basis.eval_hess(pts)
    for a, e in enumerate(np.eye(2)):
        fd = (basis.eval_grad(pts + h * e) - basis.eval_grad(pts - h * e)) / (2 * h)
        assert np.allclose(H[:, :, :, a], fd, atol=2e-7 * max(1, degree))


def test_mass_matrix_is_scaled_identity():
    mesh = build_structured_triangular(3)
    space = DGSpace(mesh, 2)
    w = space.vol_rule.weights
    for e in (0, 7, 11):
        M = space.phi_vol.T @ (w[:, None] * space.phi_vol) * space.det_j[e]
        assert np.allclose(M, space.det_j[e] * np.eye(space.n_local), atol=1e-13)


@pytest.mark.parametrize("degree", [1, 2, 3])
def test_l2_projection_reproduces_polynomials(degree):
    mesh = build_structured_triangular(3)
    space = DGSpace(mesh, degree)

    def f(pts):
        x, y = pts[:, 0], pts[:, 1]
        out = 1.0 + x - 2 * y
        if degree >= 2:
            out = out + x * y - y ** 2
        if degree >= 3:
            out = out + x ** 3
        return out

    dofs = space.l2_project(f)
    rng = np.random.default_rng(5)
    for e in (0, 5, 12):
        r = rng.uniform(0.05, 0.4, size=(6, 2))
        X = space.origin[e] + r @ space.jac[e].T
        assert np.allclose(space.eval_dofs(dofs, e, X), f(X), atol=1e-12)


def test_eval_basis_rejects_outside_points():
    mesh = build_structured_triangular(2)
    space = DGSpace(mesh, 1)
    with pytest.raises(ValueError, match="outside"):
        space.eval_basis(0, np.array([[0.9, 0.9]]))


def test_facet_trace_sides_agree_for_smooth_projection():
    mesh = build_structured_triangular(8)
    space = DGSpace(mesh, 2)
    dofs = space.l2_project(lambda pts: np.sin(pts[:, 0] + 2 * pts[:, 1]))
    s = np.array([0.2, 0.5, 0.9])
    fid = int(np.nonzero(~mesh.boundary_mask)[0][3])
    v0, g0 = space.facet_trace(dofs, fid, 0, s)
    v1, g1 = space.facet_trace(dofs, fid, 1, s)
    # projection of a smooth function: traces agree to the approximation order
    assert np.abs(v0 - v1).max() < 1e-3
    assert np.abs(g0 - g1).max() < 1e-1
    with pytest.raises(ValueError):
        bnd = int(np.nonzero(mesh.boundary_mask)[0][0])
        space.facet_trace(dofs, bnd, 1, s)


def test_trace_gradient_matches_interior_gradient():
    mesh = build_structured_triangular(2)
    space = DGSpace(mesh, 2)
    dofs = space.l2_project(lambda pts: pts[:, 0] ** 2 - pts[:, 1])
    fid = int(np.nonzero(~mesh.boundary_mask)[0][0])
    s = np.array([0.5])
    vals, grads = space.facet_trace(dofs, fid, 0, s)
    X = mesh.facet_points(s)[fid]
    assert vals[0] == pytest.approx(X[0, 0] ** 2 - X[0, 1], abs=1e-12)
    assert np.allclose(grads[0], [2 * X[0, 0], -1.0], atol=1e-12)


def test_quad_bump_raises_rule_order_only():
    mesh = build_structured_triangular(2)
    a = DGSpace(mesh, 1)
    b = DGSpace(mesh, 1, quad_bump=2)
    assert b.vol_rule.exactness == a.vol_rule.exactness + 2
    assert b.n_dofs == a.n_dofs
    f = lambda pts: pts[:, 0] + pts[:, 1]
    assert np.allclose(a.l2_project(f), b.l2_project(f), atol=1e-13)


def test_dof_layout():
    mesh = build_structured_triangular(2)
    space = DGSpace(mesh, 1)
    assert space.n_local == 3
    assert space.n_dofs == mesh.n_elements * 3
    assert space.element_dofs(2) == slice(6, 9)
