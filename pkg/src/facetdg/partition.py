"""Facet classification into diffusion/advection regimes.

Every facet gets exactly one label. Interior facets split by one-sided
normal diffusion n^T A n into diffusion-diffusion, advection-diffusion
(signed by u . n) and advection-advection classes; boundary facets split
into diffusion Dirichlet/Neumann and advection inflow/outflow. Diffusive
facets additionally carry the facet diffusion scale A_Lambda and a
diffusion- vs advection-dominated flag that gates the penalty terms.

"Almost everywhere on the facet" is realized as "at every sample point"
(facet quadrature nodes plus endpoints); a genuine sign change of n^T A n
within one facet means the mesh is misaligned with the coefficients and is
reported as an error rather than silently labeled.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .mesh import Mesh
from .problem import ProblemData, gamma0, sym_eig_max
from .quadrature import segment_rule, triangle_rule

TOL_A = 1e-12   # absolute tolerance on n^T A n positivity
TOL_U = 1e-12   # absolute tolerance on the sign of u . n


class ClassificationError(Exception):
    """A facet has mixed diffusion signature across its sample points."""


class BoundaryClass(IntEnum):
    DF_D = 0        # diffusion Dirichlet
    DF_N_MINUS = 1  # diffusion Neumann, inflow
    DF_N_PLUS = 2   # diffusion Neumann, outflow
    AD_MINUS = 3    # advection inflow
    AD_PLUS = 4     # advection outflow


class InteriorClass(IntEnum):
    DF_DF_DFD = 0   # diffusion both sides, diffusion-dominated
    DF_DF_ADD = 1   # diffusion both sides, advection-dominated
    AD_DF_PLUS = 2  # diffusion one side, u.n >= 0
    AD_DF_MINUS = 3 # diffusion one side, u.n < 0
    AD_AD = 4       # no diffusion either side


@dataclass
class FacetPartition:
    """Per-facet labels and scalars plus per-element diffusion scales."""

    interior_class: np.ndarray  # (nf,) InteriorClass value, -1 on boundary
    boundary_class: np.ndarray  # (nf,) BoundaryClass value, -1 interior
    dfd: np.ndarray             # (nf,) True where a df facet is diffusion-dominated
    dfd_inflow: np.ndarray      # (nf,) True on DF_D facets with u.n < 0 everywhere
    A_side: np.ndarray          # (nf, 2) one-sided maxima of n^T A n, nan where n/a
    A_lambda: np.ndarray        # (nf,) facet diffusion scale, nan off df facets
    un_max_abs: np.ndarray      # (nf,) max |u.n| over sample points
    A_max_K: np.ndarray         # (nel,) max eigenvalue of A on each element
    eps_df: np.ndarray          # (nel,) element diffusion scale

    @property
    def df_interior(self) -> np.ndarray:
        return np.isin(self.interior_class, (InteriorClass.DF_DF_DFD, InteriorClass.DF_DF_ADD))

    @property
    def df_dirichlet(self) -> np.ndarray:
        return self.boundary_class == BoundaryClass.DF_D

    def interior_counts(self) -> dict:
        return {c.name: int(np.sum(self.interior_class == c)) for c in InteriorClass}

    def boundary_counts(self) -> dict:
        return {c.name: int(np.sum(self.boundary_class == c)) for c in BoundaryClass}


def _facet_samples(mesh: Mesh, n_gauss: int = 5) -> np.ndarray:
    """Arclength sample parameters: Gauss nodes plus the two endpoints."""
    s, _ = np.polynomial.legendre.leggauss(n_gauss)
    s = (s + 1.0) / 2.0
    return np.concatenate([[0.0], s, [1.0]])


def element_regions(mesh: Mesh, problem: ProblemData) -> np.ndarray | None:
    """Region id per element, resolved at the centroid; None if the problem
    has no piecewise structure."""
    if problem.region_of is None:
        return None
    return np.asarray(problem.region_of(mesh.centroids), dtype=int)


def one_sided(field, pts, owner_elems, elem_region):
    """Evaluate a possibly piecewise field with the owner element's region."""
    if elem_region is None:
        return field(pts)
    reg = np.repeat(elem_region[owner_elems], len(pts) // len(owner_elems))
    return field(pts, region=reg)


def _normal_diffusion(problem, mesh, fids, side, s, elem_region):
    """n^T A n samples on one side of the given facets: (len(fids), ns)."""
    ns = len(s)
    X = mesh.facet_points(s)[fids].reshape(-1, 2)
    owners = mesh.f_elems[fids, side]
    Aval = one_sided(problem.A, X, owners, elem_region).reshape(len(fids), ns, 2, 2)
    n = mesh.f_normal[fids]
    return np.einsum("fa,fsab,fb->fs", n, Aval, n)


def classify(mesh: Mesh, problem: ProblemData, n_gauss: int = 5) -> FacetPartition:
    """Classify every facet and compute A_Lambda and eps_df."""
    s = _facet_samples(mesh, n_gauss)
    ns = len(s)
    nf = mesh.n_facets
    boundary = mesh.boundary_mask
    elem_region = element_regions(mesh, problem)

    # u . n samples (u has a continuous normal trace; evaluate plainly)
    Xf = mesh.facet_points(s)
    uval = problem.u(Xf.reshape(-1, 2)).reshape(nf, ns, 2)
    un = np.einsum("fsa,fa->fs", uval, mesh.f_normal)

    # one-sided normal diffusion samples
    nAn1 = _normal_diffusion(problem, mesh, np.arange(nf), 0, s, elem_region)
    nAn2 = np.full((nf, ns), np.nan)
    interior_ids = np.nonzero(~boundary)[0]
    if len(interior_ids):
        nAn2[interior_ids] = _normal_diffusion(problem, mesh, interior_ids, 1, s, elem_region)

    def side_positive(vals, fid):
        pos = np.all(vals > TOL_A)
        zero = np.all(vals <= TOL_A)
        if not (pos or zero):
            raise ClassificationError(
                f"facet {fid} has mixed-sign normal diffusion across its "
                f"sample points (min {vals.min():.3e}, max {vals.max():.3e}); "
                "align the mesh with the coefficient discontinuities")
        return pos

    interior_class = np.full(nf, -1, dtype=int)
    boundary_class = np.full(nf, -1, dtype=int)
    A_side = np.full((nf, 2), np.nan)
    A_lambda = np.full(nf, np.nan)
    dfd = np.zeros(nf, dtype=bool)
    dfd_inflow = np.zeros(nf, dtype=bool)

    d = mesh.dim
    for f in range(nf):
        un_f = un[f]
        all_neg = np.all(un_f < -TOL_U)
        if boundary[f]:
            df = side_positive(nAn1[f], f)
            if df:
                A_side[f, 0] = nAn1[f].max()
                is_dirichlet = bool(np.all(problem.dirichlet_predicate(mesh.f_midpoint[f][None, :])))
                if is_dirichlet:
                    boundary_class[f] = BoundaryClass.DF_D
                    A_lambda[f] = A_side[f, 0]
                    dfd[f] = np.all(mesh.f_measure[f] ** (1.0 / (d - 1)) * np.abs(un_f) < A_lambda[f])
                    dfd_inflow[f] = all_neg
                else:
                    boundary_class[f] = BoundaryClass.DF_N_MINUS if all_neg else BoundaryClass.DF_N_PLUS
            else:
                boundary_class[f] = BoundaryClass.AD_MINUS if all_neg else BoundaryClass.AD_PLUS
        else:
            df1 = side_positive(nAn1[f], f)
            df2 = side_positive(nAn2[f], f)
            if df1 and df2:
                A_side[f, 0] = nAn1[f].max()
                A_side[f, 1] = nAn2[f].max()
                A_lambda[f] = 0.5 * (A_side[f, 0] + A_side[f, 1])
                dfd[f] = np.all(mesh.f_measure[f] ** (1.0 / (d - 1)) * np.abs(un_f) < A_lambda[f])
                interior_class[f] = InteriorClass.DF_DF_DFD if dfd[f] else InteriorClass.DF_DF_ADD
            elif df1 or df2:
                A_side[f, 0 if df1 else 1] = (nAn1[f] if df1 else nAn2[f]).max()
                interior_class[f] = InteriorClass.AD_DF_MINUS if all_neg else InteriorClass.AD_DF_PLUS
            else:
                interior_class[f] = InteriorClass.AD_AD

    # element diffusion scale eps_df
    vol = triangle_rule(6)
    verts = mesh.vertices[mesh.elements]
    j1 = verts[:, 1] - verts[:, 0]
    j2 = verts[:, 2] - verts[:, 0]
    ref = np.vstack([vol.points, [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]])
    X = (verts[:, 0][:, None, :]
         + ref[None, :, 0:1] * j1[:, None, :]
         + ref[None, :, 1:2] * j2[:, None, :])
    nel = mesh.n_elements
    nsamp = X.shape[1]
    reg = None if elem_region is None else np.repeat(elem_region, nsamp)
    Aall = problem.A(X.reshape(-1, 2), region=reg).reshape(nel, nsamp, 2, 2)
    A_max_K = sym_eig_max(Aall.reshape(-1, 2, 2)).reshape(nel, nsamp).max(axis=1)

    eps_df = A_max_K.copy()
    df_facet = (interior_class == InteriorClass.DF_DF_DFD) \
        | (interior_class == InteriorClass.DF_DF_ADD) \
        | (boundary_class == BoundaryClass.DF_D)
    for e in range(nel):
        for fid in mesh.elem_facets[e]:
            if df_facet[fid]:
                eps_df[e] = max(eps_df[e], A_lambda[fid])

    return FacetPartition(
        interior_class=interior_class,
        boundary_class=boundary_class,
        dfd=dfd,
        dfd_inflow=dfd_inflow,
        A_side=A_side,
        A_lambda=A_lambda,
        un_max_abs=np.abs(un).max(axis=1),
        A_max_K=A_max_K,
        eps_df=eps_df,
    )


# thin wrappers matching the operation-level API ---------------------------

def classify_boundary(mesh: Mesh, problem: ProblemData) -> np.ndarray:
    return classify(mesh, problem).boundary_class


def classify_interior(mesh: Mesh, problem: ProblemData) -> np.ndarray:
    return classify(mesh, problem).interior_class


def compute_A_Lambda(mesh: Mesh, problem: ProblemData, fid: int) -> float:
    part = classify(mesh, problem)
    val = part.A_lambda[fid]
    if np.isnan(val):
        raise ValueError(f"facet {fid} is not a diffusion-diffusion or "
                         "diffusion-Dirichlet facet")
    return float(val)


def dominance_split(measure: float, un_samples: np.ndarray, A_lambda: float, dim: int = 2) -> str:
    """'dfd' iff |L|^{1/(d-1)} |u.n| < A_Lambda at every sample point."""
    if np.all(measure ** (1.0 / (dim - 1)) * np.abs(np.asarray(un_samples)) < A_lambda):
        return "dfd"
    return "add"


def epsilon_df(mesh: Mesh, problem: ProblemData, element: int) -> float:
    return float(classify(mesh, problem).eps_df[element])


def partition_report_rows(mesh: Mesh, part: FacetPartition) -> list[dict]:
    """Rows for the partition-report CSV, one per facet."""
    rows = []
    for f in range(mesh.n_facets):
        if part.boundary_class[f] >= 0:
            label = BoundaryClass(part.boundary_class[f]).name
            kind = "boundary"
        else:
            label = InteriorClass(part.interior_class[f]).name
            kind = "interior"
        rows.append({
            "facet": f,
            "mid_x": mesh.f_midpoint[f, 0],
            "mid_y": mesh.f_midpoint[f, 1],
            "kind": kind,
            "class": label,
            "A_lambda": part.A_lambda[f],
            "max_abs_un": part.un_max_abs[f],
            "dominance": "dfd" if part.dfd[f] else ("add" if not np.isnan(part.A_lambda[f]) else ""),
        })
    return rows
