"""Broken polynomial space: orthonormal modal basis, DOF map, projections.

The reference basis is built by Gram-Schmidt (via Cholesky of the exact
monomial Gram matrix, plus one numerical re-orthonormalization pass) so the
broken mass matrix is the identity scaled by the element Jacobian. That
makes L2 projection diagonal and keeps conditioning tame up to degree 4.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .mesh import Mesh
from .quadrature import QuadratureRule, segment_rule, triangle_rule


def _monomial_exponents(degree: int) -> np.ndarray:
    exps = [(i, k - i) for k in range(degree + 1) for i in range(k, -1, -1)]
    return np.array(exps, dtype=int)


def _exact_moment(i: int, j: int) -> float:
    # integral of x^i y^j over the reference triangle
    return math.factorial(i) * math.factorial(j) / math.factorial(i + j + 2)


class ReferenceBasis:
    """L2-orthonormal modal basis on the reference triangle."""

    def __init__(self, degree: int):
        if degree < 1 or degree > 4:
            raise ValueError("degree must be in 1..4")
        self.degree = degree
        self.exponents = _monomial_exponents(degree)
        nb = len(self.exponents)
        gram = np.empty((nb, nb))
        for a, (i1, j1) in enumerate(self.exponents):
            for b, (i2, j2) in enumerate(self.exponents):
                gram[a, b] = _exact_moment(i1 + i2, j1 + j2)
        L = np.linalg.cholesky(gram)
        coeff = np.linalg.inv(L).T
        # second pass against quadrature kills the residual of the
        # ill-conditioned monomial Gram at higher degrees
        rule = triangle_rule(2 * degree + 2)
        V = self._monomials(rule.points) @ coeff
        g2 = V.T @ (rule.weights[:, None] * V)
        coeff = coeff @ np.linalg.inv(np.linalg.cholesky(g2)).T
        self.coeff = coeff

    @property
    def n_basis(self) -> int:
        return len(self.exponents)

    def _monomials(self, pts, dx=0, dy=0):
        pts = np.atleast_2d(pts)
        x, y = pts[:, 0], pts[:, 1]
        out = np.empty((len(pts), self.n_basis))
        for k, (i, j) in enumerate(self.exponents):
            if i < dx or j < dy:
                out[:, k] = 0.0
                continue
            cf = 1.0
            for t in range(dx):
                cf *= i - t
            for t in range(dy):
                cf *= j - t
            out[:, k] = cf * x ** (i - dx) * y ** (j - dy)
        return out

    def eval(self, pts) -> np.ndarray:
        """Basis values, shape (npts, nb)."""
        return self._monomials(pts) @ self.coeff

    def eval_grad(self, pts) -> np.ndarray:
        """Reference gradients, shape (npts, nb, 2)."""
        gx = self._monomials(pts, dx=1) @ self.coeff
        gy = self._monomials(pts, dy=1) @ self.coeff
        return np.stack([gx, gy], axis=2)

    def eval_hess(self, pts) -> np.ndarray:
        """Reference Hessians, shape (npts, nb, 2, 2)."""
        hxx = self._monomials(pts, dx=2) @ self.coeff
        hxy = self._monomials(pts, dx=1, dy=1) @ self.coeff
        hyy = self._monomials(pts, dy=2) @ self.coeff
        H = np.empty((len(hxx), self.n_basis, 2, 2))
        H[:, :, 0, 0] = hxx
        H[:, :, 0, 1] = H[:, :, 1, 0] = hxy
        H[:, :, 1, 1] = hyy
        return H


class DGSpace:
    """Broken P_degree space over a mesh, element-major DOF blocks."""

    def __init__(self, mesh: Mesh, degree: int, quad_bump: int = 0):
        # quad_bump raises the quadrature exactness without changing the
        # basis; error integration uses a bumped twin of the solve space
        self.mesh = mesh
        self.degree = degree
        self.basis = ReferenceBasis(degree)
        self.vol_rule = triangle_rule(2 * degree + 2 + quad_bump)
        self.facet_rule = segment_rule(2 * degree + 3 + quad_bump)

        verts = mesh.vertices[mesh.elements]
        self.jac = np.stack([verts[:, 1] - verts[:, 0],
                             verts[:, 2] - verts[:, 0]], axis=2)  # (nel,2,2) columns
        self.det_j = (self.jac[:, 0, 0] * self.jac[:, 1, 1]
                      - self.jac[:, 0, 1] * self.jac[:, 1, 0])
        inv = np.empty_like(self.jac)
        inv[:, 0, 0] = self.jac[:, 1, 1]
        inv[:, 0, 1] = -self.jac[:, 0, 1]
        inv[:, 1, 0] = -self.jac[:, 1, 0]
        inv[:, 1, 1] = self.jac[:, 0, 0]
        self.inv_j = inv / self.det_j[:, None, None]
        self.inv_jt = np.transpose(self.inv_j, (0, 2, 1))
        self.origin = verts[:, 0]

        # basis tables at the volume rule
        self.phi_vol = self.basis.eval(self.vol_rule.points)          # (nq, nb)
        self.gphi_vol = self.basis.eval_grad(self.vol_rule.points)    # (nq, nb, 2)
        self.hphi_vol = self.basis.eval_hess(self.vol_rule.points)    # (nq, nb, 2, 2)

    @property
    def n_local(self) -> int:
        return self.basis.n_basis

    @property
    def n_dofs(self) -> int:
        return self.mesh.n_elements * self.n_local

    def element_dofs(self, e: int) -> slice:
        nb = self.n_local
        return slice(e * nb, (e + 1) * nb)

    def phys_points(self, ref_pts) -> np.ndarray:
        """Map reference points into every element: (nel, nq, 2)."""
        ref_pts = np.atleast_2d(ref_pts)
        return self.origin[:, None, :] + np.einsum("eij,qj->eqi", self.jac, ref_pts)

    def ref_coords(self, element: int, x_phys) -> np.ndarray:
        x = np.atleast_2d(x_phys) - self.origin[element]
        return x @ self.inv_j[element].T

    def eval_basis(self, element: int, x_phys, upto: str = "value"):
        """Physical basis values (and gradients) of one element at points.

        Raises for points outside the element (barycentric tolerance 1e-12).
        """
        r = self.ref_coords(element, x_phys)
        bary = np.column_stack([1.0 - r[:, 0] - r[:, 1], r[:, 0], r[:, 1]])
        if np.any(bary < -1e-12):
            raise ValueError(f"point outside element {element}")
        vals = self.basis.eval(r)
        if upto == "value":
            return vals
        if upto == "gradient":
            g = self.basis.eval_grad(r)
            return vals, np.einsum("ij,qbj->qbi", self.inv_jt[element], g)
        raise ValueError("upto must be 'value' or 'gradient'")

    def l2_project(self, f, region_of=None) -> np.ndarray:
        """Elementwise L2 projection of a field onto the broken space.

        With the orthonormal basis the local mass matrix is det(J) I, so the
        coefficients are plain weighted sums. `region_of` resolves piecewise
        fields from the element centroid so interface elements project the
        correct branch.
        """
        X = self.phys_points(self.vol_rule.points)
        nel, nq, _ = X.shape
        if region_of is None:
            vals = f(X.reshape(-1, 2)).reshape(nel, nq)
        else:
            reg = np.repeat(np.asarray(region_of(self.mesh.centroids), dtype=int), nq)
            vals = f(X.reshape(-1, 2), region=reg).reshape(nel, nq)
        coeffs = np.einsum("q,eq,qb->eb", self.vol_rule.weights, vals, self.phi_vol)
        return coeffs.reshape(-1)

    def eval_dofs(self, dofs, element: int, x_phys) -> np.ndarray:
        local = np.asarray(dofs)[self.element_dofs(element)]
        return self.eval_basis(element, x_phys) @ local

    def facet_trace(self, dofs, fid: int, side: int, s) -> tuple[np.ndarray, np.ndarray]:
        """One-sided trace (values, physical gradients) on a facet at
        arclength parameters s. Side 1 on a boundary facet is an error."""
        e = self.mesh.f_elems[fid, side]
        if e < 0:
            raise ValueError(f"facet {fid} has no side {side}")
        r = self.mesh.facet_ref_points(fid, side, np.asarray(s, dtype=float))
        local = np.asarray(dofs)[self.element_dofs(e)]
        vals = self.basis.eval(r) @ local
        g = np.einsum("qbj,b->qj", self.basis.eval_grad(r), local)
        grads = g @ self.inv_jt[e].T
        return vals, grads
