import numpy as np
import pytest

from facetdg.mesh import build_structured_triangular
from facetdg.problem import (Poly2, builtin_problem, constant_field,
                             custom_problem, expression_scalar, gamma0,
                             piecewise_field, scalar_field, tensor_field,
                             validate_problem, vector_field)


def _fd_grad(f, pts, h=1e-6):
    ex = np.array([h, 0.0])
    ey = np.array([0.0, h])
    return np.stack([(f(pts + ex) - f(pts - ex)) / (2 * h),
                     (f(pts + ey) - f(pts - ey)) / (2 * h)], axis=1)


def rng_points(seed, n=40, lo=0.05, hi=0.95):
    rng = np.random.default_rng(seed)
    return rng.uniform(lo, hi, size=(n, 2))


@pytest.mark.parametrize("name,kwargs", [
    ("pure_diffusion", {}),
    ("advection_dominated", {"eps": 1e-3}),
    ("polynomial_exactness", {"degree": 3}),
])
def test_exact_gradient_matches_finite_differences(name, kwargs):
    p = builtin_problem(name, **kwargs)
    pts = rng_points(0)
    g = p.exact.grad(pts)
    assert np.allclose(g, _fd_grad(p.exact.value, pts), atol=5e-9)


@pytest.mark.parametrize("name,kwargs", [
    ("pure_diffusion", {}),
    ("advection_dominated", {"eps": 1e-2}),
    ("polynomial_exactness", {"degree": 2}),
])
def test_manufactured_source_satisfies_pde(name, kwargs):
    # residual of div(-A grad c + u c) + gamma c - g, evaluated with the
    # analytic gradient/Hessian (constant-coefficient problems)
    p = builtin_problem(name, **kwargs)
    pts = rng_points(1)
    A = p.A(pts)
    H = p.exact.hess(pts)
    diff = -np.einsum("nab,nab->n", A, H)
    adv = np.einsum("na,na->n", p.u(pts), p.exact.grad(pts)) \
        + p.div_u(pts) * p.exact.value(pts)
    res = diff + adv + p.gamma(pts) * p.exact.value(pts) - p.g(pts)
    assert np.abs(res).max() < 1e-10


def test_degenerate_interface_branches_and_flux_continuity():
    p = builtin_problem("degenerate_interface")
    y = np.linspace(0.1, 0.9, 7)
    pts = np.column_stack([np.full_like(y, 0.5), y])
    left = p.exact.value(pts, region=0)
    right = p.exact.value(pts, region=1)
    # the exact solution genuinely jumps across the degenerate interface
    assert np.abs(left - right).min() > 1.0
    # normal component of the total flux is continuous: the elliptic side has
    # zero normal diffusive flux at the interface and u . n = 0 there
    gl = p.exact.grad(pts, region=0)
    assert np.abs(gl[:, 0]).max() < 1e-12
    assert np.abs(p.u(pts)[:, 0]).max() == 0.0
    # each branch satisfies its own PDE
    for r in (0, 1):
        A = p.A(pts, region=r)
        H = p.exact.hess(pts, region=r)
        res = (-np.einsum("nab,nab->n", A, H)
               + np.einsum("na,na->n", p.u(pts), p.exact.grad(pts, region=r))
               + p.gamma(pts) * p.exact.value(pts, region=r)
               - p.g(pts, region=r))
        assert np.abs(res).max() < 1e-10


def test_piecewise_field_region_override():
    region_of = lambda pts: (np.atleast_2d(pts)[:, 0] > 0.5).astype(int)
    f = piecewise_field(region_of, [constant_field(1.0), constant_field(2.0)])
    pts = np.array([[0.2, 0.5], [0.8, 0.5], [0.5, 0.5]])
    assert np.array_equal(f(pts), [1.0, 2.0, 1.0])  # tie goes to region 0
    assert np.array_equal(f(pts, region=1), [2.0, 2.0, 2.0])
    assert np.array_equal(f(pts, region=np.array([1, 0, 1])), [2.0, 1.0, 2.0])


def test_gamma0_combines_reaction_and_divergence():
    p = builtin_problem("pure_diffusion")
    pts = rng_points(2, n=5)
    assert np.allclose(gamma0(p, pts), 1.0)


def test_poly2_calculus():
    q = Poly2({(2, 1): 3.0, (0, 2): 1.0})
    pts = rng_points(3, n=6)
    x, y = pts[:, 0], pts[:, 1]
    assert np.allclose(q(pts), 3 * x ** 2 * y + y ** 2)
    assert np.allclose(q.dx()(pts), 6 * x * y)
    assert np.allclose(q.dy()(pts), 3 * x ** 2 + 2 * y)
    assert q.degree() == 3


def test_validate_problem_flags_indefinite_tensor():
    p = builtin_problem("pure_diffusion")
    bad = tensor_field(lambda pts: np.broadcast_to(
        np.array([[1.0, 2.0], [2.0, 1.0]]), (len(pts), 2, 2)))
    p.A = bad  # eigenvalues -1, 3
    rep = validate_problem(p, build_structured_triangular(2))
    assert not rep
    assert rep.violations[0][0] == "A_not_psd"
    assert len(rep.violations) <= 10


def test_validate_problem_accepts_builtin():
    mesh = build_structured_triangular(3)
    for name in ("pure_diffusion", "degenerate_interface"):
        assert validate_problem(builtin_problem(name), mesh)


def test_expression_fields_and_custom_problem():
    f = expression_scalar("sin(pi*x) + 2*y")
    pts = np.array([[0.5, 0.25]])
    assert f(pts)[0] == pytest.approx(1.5)
    p = custom_problem({
        "A": "0.1", "u": "1; 0", "div_u": "0", "gamma": "1",
        "g": "x + y", "kappa": "0", "dirichlet": "1",
    })
    assert p.g(pts)[0] == pytest.approx(0.75)
    assert p.A(pts)[0, 0, 0] == pytest.approx(0.1)
    assert bool(p.dirichlet_predicate(pts)[0])
    with pytest.raises(ValueError, match="missing"):
        custom_problem({"A": "1"})
