"""Coefficient fields, problem data, and built-in benchmark problems.

Fields are pointwise evaluators over arrays of points, optionally defined
piecewise over a user partition of the domain. Piecewise fields accept an
explicit region id so one-sided traces on region interfaces stay exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional, Sequence

import numpy as np

from .quadrature import triangle_rule, segment_rule


class Field:
    """Pointwise coefficient field x -> value.

    `shape` is the per-point value shape: () scalar, (2,) vector, (2, 2)
    symmetric tensor. Evaluation takes an (N, 2) point array and returns an
    array of shape (N,) + shape. Piecewise fields resolve the branch from
    `region_of(points)` unless a region id (scalar or per-point array) is
    passed explicitly; points sitting exactly on a region boundary resolve
    to the lower region id through `region_of` itself.
    """

    def __init__(self, fn=None, shape=(), region_of=None, branches=None):
        if (fn is None) == (branches is None):
            raise ValueError("provide exactly one of fn / branches")
        self.fn = fn
        self.shape = tuple(shape)
        self.region_of = region_of
        self.branches = branches
        if branches is not None and region_of is None:
            raise ValueError("piecewise field needs region_of")

    def __call__(self, pts, region=None):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        n = len(pts)
        if self.branches is None:
            out = np.asarray(self.fn(pts), dtype=float)
            return np.broadcast_to(out, (n,) + self.shape).copy() if out.shape != (n,) + self.shape else out
        if region is None:
            rid = np.asarray(self.region_of(pts), dtype=int)
        elif np.isscalar(region):
            rid = np.full(n, int(region))
        else:
            rid = np.asarray(region, dtype=int)
        out = np.empty((n,) + self.shape)
        for j, br in enumerate(self.branches):
            m = rid == j
            if np.any(m):
                out[m] = br(pts[m])
        return out


def scalar_field(fn) -> Field:
    return Field(fn=fn, shape=())


def vector_field(fn) -> Field:
    return Field(fn=fn, shape=(2,))


def tensor_field(fn) -> Field:
    return Field(fn=fn, shape=(2, 2))


def constant_field(value) -> Field:
    value = np.asarray(value, dtype=float)
    shape = value.shape
    return Field(fn=lambda pts, v=value: np.broadcast_to(v, (len(pts),) + shape), shape=shape)


def piecewise_field(region_of, branches: Sequence[Field]) -> Field:
    shapes = {b.shape for b in branches}
    if len(shapes) != 1:
        raise ValueError("piecewise branches must share one value shape")
    return Field(branches=list(branches), shape=shapes.pop(), region_of=region_of)


class Poly2:
    """Bivariate polynomial with {(i, j): coeff} monomial dict; used to
    derive manufactured sources by exact differentiation."""

    def __init__(self, coeffs: dict):
        self.coeffs = {k: float(v) for k, v in coeffs.items() if v != 0.0} or {(0, 0): 0.0}

    def __call__(self, pts):
        pts = np.atleast_2d(pts)
        x, y = pts[:, 0], pts[:, 1]
        out = np.zeros(len(pts))
        for (i, j), a in self.coeffs.items():
            out += a * x ** i * y ** j
        return out

    def dx(self) -> "Poly2":
        return Poly2({(i - 1, j): a * i for (i, j), a in self.coeffs.items() if i > 0})

    def dy(self) -> "Poly2":
        return Poly2({(i, j - 1): a * j for (i, j), a in self.coeffs.items() if j > 0})

    def degree(self) -> int:
        return max(i + j for (i, j) in self.coeffs)


@dataclass
class ExactSolution:
    """Manufactured solution with analytic derivatives.

    The Hessian backs the second-derivative part of the stabilization term
    in energy-norm error integration; built-in problems always supply it.
    """
    value: Field
    grad: Field
    hess: Optional[Field] = None


@dataclass
class ProblemData:
    A: Field                      # symmetric PSD diffusion tensor
    u: Field                      # advection velocity
    div_u: Field                  # analytic divergence of u
    gamma: Field                  # reaction coefficient
    g: Field                      # volume source
    kappa: Field                  # Dirichlet data on Gamma_D
    chi_minus: Field              # natural data on the inflow diffusion-Neumann part
    chi_plus: Field               # natural data on the outflow diffusion-Neumann part
    dirichlet_predicate: Callable[[np.ndarray], np.ndarray]
    exact: Optional[ExactSolution] = None
    region_of: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = "custom"


def gamma0(p: ProblemData, pts, region=None) -> np.ndarray:
    """Effective reaction gamma + div(u)/2 from the skew advection split."""
    return p.gamma(pts, region=region) + 0.5 * p.div_u(pts, region=region)


def _sym_eig_min(A: np.ndarray) -> np.ndarray:
    """Smallest eigenvalue of symmetric 2x2 tensors, batched."""
    a, b, c = A[:, 0, 0], A[:, 0, 1], A[:, 1, 1]
    mean = 0.5 * (a + c)
    rad = np.sqrt((0.5 * (a - c)) ** 2 + b ** 2)
    return mean - rad


def sym_eig_max(A: np.ndarray) -> np.ndarray:
    a, b, c = A[:, 0, 0], A[:, 0, 1], A[:, 1, 1]
    mean = 0.5 * (a + c)
    rad = np.sqrt((0.5 * (a - c)) ** 2 + b ** 2)
    return mean + rad


@dataclass
class ValidationReport:
    ok: bool
    violations: list  # (kind, point, value) tuples, first 10 kept

    def __bool__(self):
        return self.ok


PSD_TOL = -1e-12


def validate_problem(p: ProblemData, mesh, sample_exactness: int = 6) -> ValidationReport:
    """Sample PSD-ness of A and nonnegativity of gamma0 at volume and facet
    quadrature points; returns a structured report instead of raising."""
    violations = []

    vol = triangle_rule(sample_exactness)
    pts_ref = vol.points
    verts = mesh.vertices[mesh.elements]
    j1 = verts[:, 1] - verts[:, 0]
    j2 = verts[:, 2] - verts[:, 0]
    X = (verts[:, 0][:, None, :]
         + pts_ref[None, :, 0:1] * j1[:, None, :]
         + pts_ref[None, :, 1:2] * j2[:, None, :]).reshape(-1, 2)
    seg = segment_rule(sample_exactness)
    Xf = mesh.facet_points(seg.points).reshape(-1, 2)
    allpts = np.vstack([X, Xf])

    Aval = p.A(allpts)
    lam = _sym_eig_min(Aval)
    bad = np.nonzero(lam < PSD_TOL)[0]
    for i in bad[:10]:
        violations.append(("A_not_psd", allpts[i].copy(), float(lam[i])))

    g0 = gamma0(p, allpts)
    bad = np.nonzero(g0 < -1e-12)[0]
    for i in bad[:10]:
        violations.append(("gamma0_negative", allpts[i].copy(), float(g0[i])))

    return ValidationReport(ok=len(violations) == 0, violations=violations[:10])


# ---------------------------------------------------------------------------
# built-in benchmark problems
# ---------------------------------------------------------------------------

_ZERO = constant_field(0.0)


def _all_dirichlet(pts):
    return np.ones(len(np.atleast_2d(pts)), dtype=bool)


def _pure_diffusion() -> ProblemData:
    pi = math.pi

    def c(pts):
        return np.sin(pi * pts[:, 0]) * np.sin(pi * pts[:, 1])

    def grad(pts):
        x, y = pts[:, 0], pts[:, 1]
        return np.stack([pi * np.cos(pi * x) * np.sin(pi * y),
                         pi * np.sin(pi * x) * np.cos(pi * y)], axis=1)

    def hess(pts):
        x, y = pts[:, 0], pts[:, 1]
        ss = np.sin(pi * x) * np.sin(pi * y)
        cc = np.cos(pi * x) * np.cos(pi * y)
        H = np.empty((len(pts), 2, 2))
        H[:, 0, 0] = -pi ** 2 * ss
        H[:, 1, 1] = -pi ** 2 * ss
        H[:, 0, 1] = H[:, 1, 0] = pi ** 2 * cc
        return H

    def g(pts):
        return (2.0 * pi ** 2 + 1.0) * c(pts)

    return ProblemData(
        A=constant_field(np.eye(2)),
        u=constant_field([0.0, 0.0]),
        div_u=_ZERO,
        gamma=constant_field(1.0),
        g=scalar_field(g),
        kappa=scalar_field(c),
        chi_minus=_ZERO,
        chi_plus=_ZERO,
        dirichlet_predicate=_all_dirichlet,
        exact=ExactSolution(scalar_field(c), vector_field(grad), tensor_field(hess)),
        name="pure_diffusion",
    )


def _advection_dominated(eps: float) -> ProblemData:
    pi = math.pi
    uvec = np.array([1.0, 1.0]) / math.sqrt(2.0)

    def c(pts):
        x, y = pts[:, 0], pts[:, 1]
        return np.sin(pi * x) * np.sin(pi * y) + 0.5 * (x + y)

    def grad(pts):
        x, y = pts[:, 0], pts[:, 1]
        return np.stack([pi * np.cos(pi * x) * np.sin(pi * y) + 0.5,
                         pi * np.sin(pi * x) * np.cos(pi * y) + 0.5], axis=1)

    def hess(pts):
        x, y = pts[:, 0], pts[:, 1]
        ss = np.sin(pi * x) * np.sin(pi * y)
        cc = np.cos(pi * x) * np.cos(pi * y)
        H = np.empty((len(pts), 2, 2))
        H[:, 0, 0] = -pi ** 2 * ss
        H[:, 1, 1] = -pi ** 2 * ss
        H[:, 0, 1] = H[:, 1, 0] = pi ** 2 * cc
        return H

    def g(pts):
        # -div(eps I grad c) + u . grad c + gamma c, with div u = 0, gamma = 1
        x, y = pts[:, 0], pts[:, 1]
        lap = -2.0 * pi ** 2 * np.sin(pi * x) * np.sin(pi * y)
        return -eps * lap + grad(pts) @ uvec + c(pts)

    return ProblemData(
        A=constant_field(eps * np.eye(2)),
        u=constant_field(uvec),
        div_u=_ZERO,
        gamma=constant_field(1.0),
        g=scalar_field(g),
        kappa=scalar_field(c),
        chi_minus=_ZERO,
        chi_plus=_ZERO,
        dirichlet_predicate=_all_dirichlet,
        exact=ExactSolution(scalar_field(c), vector_field(grad), tensor_field(hess)),
        name="advection_dominated",
    )


def _degenerate_interface() -> ProblemData:
    """Elliptic for x < 1/2, hyperbolic for x > 1/2; u = (0, 1) is tangent
    to the interface, so the exact solution may jump across it.

    Left branch cos(2 pi x) e^y has zero normal derivative at x = 1/2, which
    keeps the total flux normally continuous across the interface.
    """
    pi = math.pi

    def region_of(pts):
        pts = np.atleast_2d(pts)
        return (pts[:, 0] > 0.5).astype(int)

    def cL(pts):
        return np.cos(2 * pi * pts[:, 0]) * np.exp(pts[:, 1])

    def gradL(pts):
        x, y = pts[:, 0], pts[:, 1]
        ey = np.exp(y)
        return np.stack([-2 * pi * np.sin(2 * pi * x) * ey,
                         np.cos(2 * pi * x) * ey], axis=1)

    def hessL(pts):
        x, y = pts[:, 0], pts[:, 1]
        ey = np.exp(y)
        H = np.empty((len(pts), 2, 2))
        H[:, 0, 0] = -4 * pi ** 2 * np.cos(2 * pi * x) * ey
        H[:, 0, 1] = H[:, 1, 0] = -2 * pi * np.sin(2 * pi * x) * ey
        H[:, 1, 1] = np.cos(2 * pi * x) * ey
        return H

    def gL(pts):
        # -lap(cL) + d_y cL + cL  with A = I, u = (0,1), gamma0 = 1
        return (4 * pi ** 2 + 1.0) * cL(pts)

    def cR(pts):
        return 2.0 + pts[:, 0] * pts[:, 1]

    def gradR(pts):
        return np.stack([pts[:, 1], pts[:, 0]], axis=1)

    def hessR(pts):
        H = np.zeros((len(pts), 2, 2))
        H[:, 0, 1] = H[:, 1, 0] = 1.0
        return H

    def gR(pts):
        # d_y cR + cR  with A = 0
        return pts[:, 0] + cR(pts)

    A = piecewise_field(region_of, [constant_field(np.eye(2)), constant_field(np.zeros((2, 2)))])
    g = piecewise_field(region_of, [scalar_field(gL), scalar_field(gR)])
    cval = piecewise_field(region_of, [scalar_field(cL), scalar_field(cR)])
    cgrad = piecewise_field(region_of, [vector_field(gradL), vector_field(gradR)])
    chess = piecewise_field(region_of, [tensor_field(hessL), tensor_field(hessR)])

    return ProblemData(
        A=A,
        u=constant_field([0.0, 1.0]),
        div_u=_ZERO,
        gamma=constant_field(1.0),
        g=g,
        kappa=cval,
        chi_minus=_ZERO,
        chi_plus=_ZERO,
        dirichlet_predicate=_all_dirichlet,
        exact=ExactSolution(cval, cgrad, chess),
        region_of=region_of,
        name="degenerate_interface",
    )


def _polynomial_exactness(degree: int) -> ProblemData:
    if degree < 1 or degree > 4:
        raise ValueError("polynomial_exactness supports degree 1..4")
    coeffs = {(0, 0): 1.0, (1, 0): 1.0, (0, 1): 2.0}
    if degree >= 2:
        coeffs.update({(2, 0): 1.0, (1, 1): 1.0, (0, 2): 1.0})
    if degree >= 3:
        coeffs.update({(3, 0): 1.0, (2, 1): 1.0})
    if degree >= 4:
        coeffs.update({(4, 0): 1.0, (0, 4): 1.0})
    c = Poly2(coeffs)
    cx, cy = c.dx(), c.dy()
    cxx, cxy, cyy = cx.dx(), cx.dy(), cy.dy()
    uvec = np.array([1.0, 2.0])
    # g = -lap c + u . grad c + gamma c, with A = I, div u = 0, gamma = 1
    terms = [(-1.0, cxx), (-1.0, cyy), (uvec[0], cx), (uvec[1], cy), (1.0, c)]

    def g(pts, terms=terms):
        out = np.zeros(len(np.atleast_2d(pts)))
        for a, t in terms:
            out += a * t(pts)
        return out

    def grad(pts):
        return np.stack([cx(pts), cy(pts)], axis=1)

    def hess(pts):
        H = np.empty((len(np.atleast_2d(pts)), 2, 2))
        H[:, 0, 0] = cxx(pts)
        H[:, 0, 1] = H[:, 1, 0] = cxy(pts)
        H[:, 1, 1] = cyy(pts)
        return H

    return ProblemData(
        A=constant_field(np.eye(2)),
        u=constant_field(uvec),
        div_u=_ZERO,
        gamma=constant_field(1.0),
        g=scalar_field(g),
        kappa=scalar_field(c),
        chi_minus=_ZERO,
        chi_plus=_ZERO,
        dirichlet_predicate=_all_dirichlet,
        exact=ExactSolution(scalar_field(c), vector_field(grad), tensor_field(hess)),
        name=f"polynomial_exactness_{degree}",
    )


BUILTIN_NAMES = ("pure_diffusion", "advection_dominated", "degenerate_interface",
                 "polynomial_exactness")


def builtin_problem(name: str, degree: int = 1, eps: float = 1e-6) -> ProblemData:
    """Benchmark problems on the unit square.

    `degree` selects the polynomial degree for polynomial_exactness;
    `eps` the diffusion magnitude for advection_dominated.
    """
    if name == "pure_diffusion":
        return _pure_diffusion()
    if name == "advection_dominated":
        return _advection_dominated(eps)
    if name == "degenerate_interface":
        return _degenerate_interface()
    if name == "polynomial_exactness":
        return _polynomial_exactness(degree)
    raise ValueError(f"unknown builtin problem {name!r}; known: {BUILTIN_NAMES}")


# ---------------------------------------------------------------------------
# expression-based custom problems (CLI config)
# ---------------------------------------------------------------------------

_EXPR_NAMES = {name: getattr(np, name) for name in
               ("sin", "cos", "tan", "exp", "log", "sqrt", "abs", "tanh",
                "cosh", "sinh", "arctan", "minimum", "maximum", "sign")}
_EXPR_NAMES["pi"] = math.pi


def expression_scalar(expr: str) -> Field:
    """Scalar field from an arithmetic expression of x and y."""
    code = compile(expr, "<coefficient>", "eval")

    def fn(pts):
        env = dict(_EXPR_NAMES)
        env["x"] = pts[:, 0]
        env["y"] = pts[:, 1]
        val = eval(code, {"__builtins__": {}}, env)
        return np.broadcast_to(np.asarray(val, dtype=float), (len(pts),)).copy()

    return scalar_field(fn)


def expression_vector(expr_x: str, expr_y: str) -> Field:
    fx = expression_scalar(expr_x)
    fy = expression_scalar(expr_y)
    return vector_field(lambda pts: np.stack([fx(pts), fy(pts)], axis=1))


def custom_problem(config: dict) -> ProblemData:
    """Build a ProblemData from expression strings.

    Keys: "A" (scalar expression, used as A = expr * I), "u" = "ex; ey",
    "div_u", "gamma", "g", "kappa", optional "chi_minus"/"chi_plus",
    optional "dirichlet" (expression evaluating nonzero where Dirichlet).
    """
    required = ("A", "u", "div_u", "gamma", "g", "kappa")
    missing = [k for k in required if k not in config]
    if missing:
        raise ValueError(f"custom problem config missing keys: {missing}")
    eps = expression_scalar(config["A"])

    def A_fn(pts):
        e = eps(pts)
        out = np.zeros((len(pts), 2, 2))
        out[:, 0, 0] = e
        out[:, 1, 1] = e
        return out

    ux, uy = (s.strip() for s in config["u"].split(";"))
    dirichlet = config.get("dirichlet", "1")
    dpred_field = expression_scalar(dirichlet)

    return ProblemData(
        A=tensor_field(A_fn),
        u=expression_vector(ux, uy),
        div_u=expression_scalar(config["div_u"]),
        gamma=expression_scalar(config["gamma"]),
        g=expression_scalar(config["g"]),
        kappa=expression_scalar(config["kappa"]),
        chi_minus=expression_scalar(config.get("chi_minus", "0")),
        chi_plus=expression_scalar(config.get("chi_plus", "0")),
        dirichlet_predicate=lambda pts: dpred_field(pts) != 0.0,
        name="custom",
    )
