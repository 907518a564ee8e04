"""Assembly of the stabilized DG operator, load vector, and energy norm.

The bilinear form combines: broken diffusion, average/lifting terms on
diffusion-diffusion and diffusion-Dirichlet facets (non-symmetric sign),
jump penalties on a mode-dependent facet set, the skew advection form with
pointwise upwind coupling on local inflow boundaries, the effective
reaction, and a residual-based streamline stabilization with a pointwise
(or per-element) stabilizing parameter.

Penalty modes:
  minimal_dfd  penalties only on diffusion-dominated diffusive facets
  full_df      penalties on every diffusive facet
  legacy_all   baseline that penalizes every facet with an h^-1 weight
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .partition import (BoundaryClass, FacetPartition, InteriorClass,
                        element_regions)
from .problem import ProblemData
from .space import DGSpace

MODES = ("minimal_dfd", "full_df", "legacy_all")


class AssemblyError(Exception):
    pass


@dataclass
class StabilizationConfig:
    """Streamline-stabilization settings.

    alpha defaults to 0.25 * min(2/3, 1/C_inv^2), safely inside the
    admissible interval; the coercivity bound requires
    alpha < min(2/3, 1/C_inv^2).
    """
    alpha: Optional[float] = None
    tau_variant: str = "pointwise"  # or "dk_based"
    c_inv: Optional[float] = None

    def resolved_alpha(self, c_inv: float, safety: float = 0.25) -> float:
        if self.alpha is not None:
            if self.alpha <= 0:
                raise ValueError("alpha must be positive")
            return self.alpha
        return safety * min(2.0 / 3.0, 1.0 / c_inv ** 2)


@dataclass
class AssembledSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    space: DGSpace
    mode: str
    alpha: float
    tau_variant: str
    degenerate_elements: np.ndarray  # elements where tau collapsed to 0


def estimate_C_inv(space: DGSpace) -> float:
    """Mesh maximum of h_K |q|_H1 / ||q||_L2 over the local basis span,
    via the local stiffness eigenproblem (mass is det(J) I)."""
    w = space.vol_rule.weights
    G = np.einsum("eij,qbj->eqbi", space.inv_jt, space.gphi_vol)
    wdet = w[None, :] * space.det_j[:, None]
    S = np.einsum("eq,eqia,eqja->eij", wdet, G, G)
    lam = np.linalg.eigvalsh(S)[:, -1] / space.det_j
    return float(np.max(space.mesh.diameters * np.sqrt(np.maximum(lam, 0.0))))


def _eval_field(fld, X, elem_region, owners):
    """Evaluate a field at stacked per-owner points with owner regions."""
    flat = X.reshape(-1, 2)
    if elem_region is None:
        out = fld(flat)
    else:
        reg = np.repeat(elem_region[owners], X.shape[1])
        out = fld(flat, region=reg)
    return out.reshape(X.shape[:2] + out.shape[1:])


class Assembler:
    """Precomputes volume and facet tables once; serves assembly, the
    energy-norm evaluation, and the advection identities."""

    def __init__(self, space: DGSpace, problem: ProblemData,
                 partition: FacetPartition, cfg: StabilizationConfig | None = None,
                 mode: str = "minimal_dfd"):
        if mode not in MODES:
            raise ValueError(f"unknown penalty mode {mode!r}")
        self.space = space
        self.problem = problem
        self.partition = partition
        self.cfg = cfg or StabilizationConfig()
        self.mode = mode
        mesh = space.mesh

        self.c_inv = self.cfg.c_inv if self.cfg.c_inv is not None else estimate_C_inv(space)
        self.alpha = self.cfg.resolved_alpha(self.c_inv)
        self.elem_region = element_regions(mesh, problem)

        # ---- volume tables ------------------------------------------------
        w = space.vol_rule.weights
        self.wdet = w[None, :] * space.det_j[:, None]                 # (nel, nq)
        self.G = np.einsum("eij,qbj->eqbi", space.inv_jt, space.gphi_vol)
        self.Hp = np.einsum("eik,qbkl,ejl->eqbij",
                            space.inv_jt, space.hphi_vol, space.inv_jt)
        X = space.phys_points(space.vol_rule.points)
        owners = np.arange(mesh.n_elements)
        self.A_vol = _eval_field(problem.A, X, self.elem_region, owners)
        self.u_vol = _eval_field(problem.u, X, self.elem_region, owners)
        self.divu_vol = _eval_field(problem.div_u, X, self.elem_region, owners)
        self.g0_vol = _eval_field(problem.gamma, X, self.elem_region, owners) \
            + 0.5 * self.divu_vol
        self.g_vol = _eval_field(problem.g, X, self.elem_region, owners)
        self.X_vol = X

        self.D_K = self._compute_D_K_prep()
        self.tau_vol, self.degenerate_elements = self._tau(
            np.linalg.norm(self.u_vol, axis=2),
            np.abs(self.divu_vol), np.abs(self.g0_vol))

        # ---- facet tables -------------------------------------------------
        fr = space.facet_rule
        self.s = fr.points
        nf = mesh.n_facets
        nqf = len(self.s)
        self.Xf = mesh.facet_points(self.s)                           # (nf, nqf, 2)
        self.wf = fr.weights[None, :] * mesh.f_measure[:, None]       # (nf, nqf)
        self.normal = mesh.f_normal
        self.interior = ~mesh.boundary_mask
        self.owners = mesh.f_elems

        uf = problem.u(self.Xf.reshape(-1, 2)).reshape(nf, nqf, 2)
        self.un = np.einsum("fqa,fa->fq", uf, self.normal)

        nb = space.n_local
        self.V = np.zeros((2, nf, nqf, nb))
        self.Gp = np.zeros((2, nf, nqf, nb, 2))
        self.Fn = np.zeros((2, nf, nqf, nb))
        for side in (0, 1):
            fids = np.nonzero(self.owners[:, side] >= 0)[0]
            own = self.owners[fids, side]
            ra = mesh.f_ref_ends[fids, side, 0]
            rb = mesh.f_ref_ends[fids, side, 1]
            r = (ra[:, None, :] * (1.0 - self.s)[None, :, None]
                 + rb[:, None, :] * self.s[None, :, None])
            vals = space.basis.eval(r.reshape(-1, 2)).reshape(len(fids), nqf, nb)
            grads = space.basis.eval_grad(r.reshape(-1, 2)).reshape(len(fids), nqf, nb, 2)
            gp = np.einsum("fij,fqbj->fqbi", space.inv_jt[own], grads)
            Af = _eval_field(problem.A, self.Xf[fids], self.elem_region, own)
            An = np.einsum("fqab,fb->fqa", Af, self.normal[fids])
            self.V[side, fids] = vals
            self.Gp[side, fids] = gp
            self.Fn[side, fids] = np.einsum("fqa,fqba->fqb", An, gp)

        # facet-set masks
        part = self.partition
        self.avg_int = part.df_interior
        self.avg_bnd = part.df_dirichlet
        self._setup_penalties()

    # ---- stabilizing parameter -------------------------------------------

    def _tau(self, u_norm, divu_abs, g0_abs):
        """Stabilization parameter at the volume quadrature points."""
        mesh = self.space.mesh
        h = mesh.diameters[:, None]
        if self.cfg.tau_variant == "pointwise":
            den = (self.partition.eps_df[:, None] + h * u_norm
                   + h ** 2 * divu_abs + h ** 2 * g0_abs)
        elif self.cfg.tau_variant == "dk_based":
            den = np.broadcast_to(self.D_K[:, None], u_norm.shape).copy()
        else:
            raise ValueError(f"unknown tau variant {self.cfg.tau_variant!r}")
        tau = np.zeros_like(den)
        ok = den > 0.0
        tau[ok] = self.alpha * np.broadcast_to(h ** 2, den.shape)[ok] / den[ok]
        degenerate = np.nonzero((~ok).any(axis=1))[0]
        return tau, degenerate

    def _compute_D_K_prep(self):
        """Element parameter combining diffusion, boundary advective flux,
        velocity, divergence, and reaction scales."""
        mesh = self.space.mesh
        fr = self.space.facet_rule
        Xf = mesh.facet_points(fr.points)
        nf, nqf = Xf.shape[:2]
        uf = self.problem.u(Xf.reshape(-1, 2)).reshape(nf, nqf, 2)
        un_abs = np.abs(np.einsum("fqa,fa->fq", uf, mesh.f_normal))
        flux_l1 = (fr.weights[None, :] * mesh.f_measure[:, None] * un_abs).sum(axis=1)
        bnd_l1 = flux_l1[mesh.elem_facets].sum(axis=1)

        u_l2 = np.sqrt(np.einsum("eq,eq->e", self.wdet,
                                 np.einsum("eqa,eqa->eq", self.u_vol, self.u_vol)))
        divu_l2 = np.sqrt(np.einsum("eq,eq->e", self.wdet, self.divu_vol ** 2))
        g0_l2 = np.sqrt(np.einsum("eq,eq->e", self.wdet, self.g0_vol ** 2))
        h = mesh.diameters
        K = mesh.areas
        return (self.partition.eps_df
                + h ** 2 / K * bnd_l1
                + h / np.sqrt(K) * u_l2
                + h ** 2 / np.sqrt(K) * divu_l2
                + h ** 2 / np.sqrt(K) * g0_l2)

    # ---- penalty sets -----------------------------------------------------

    def _setup_penalties(self):
        part = self.partition
        mesh = self.space.mesh
        d = mesh.dim
        if self.mode == "minimal_dfd":
            self.pen_int = part.interior_class == InteriorClass.DF_DF_DFD
            self.pen_bnd = part.df_dirichlet & part.dfd
            base = np.where(np.isnan(part.A_lambda), 0.0, part.A_lambda)
            self.pen_w = mesh.f_measure ** (-1.0 / (d - 1)) * base
        elif self.mode == "full_df":
            self.pen_int = part.df_interior
            self.pen_bnd = part.df_dirichlet
            base = np.where(np.isnan(part.A_lambda), 0.0, part.A_lambda)
            self.pen_w = mesh.f_measure ** (-1.0 / (d - 1)) * base
        else:  # legacy_all: strawman h^-1 penalty everywhere
            self.pen_int = self.interior.copy()
            self.pen_bnd = np.isin(part.boundary_class,
                                   (BoundaryClass.DF_D, BoundaryClass.AD_MINUS))
            base = np.where(np.isnan(part.A_lambda), 0.0, part.A_lambda)
            self.pen_w = np.maximum(base, 1.0) / mesh.f_measure

    # ---- system assembly ---------------------------------------------------

    def system(self) -> AssembledSystem:
        space = self.space
        mesh = space.mesh
        nb = space.n_local
        nel = mesh.n_elements
        ndof = space.n_dofs
        phi = space.phi_vol

        rows_all, cols_all, data_all = [], [], []
        rhs = np.zeros(ndof)

        # volume blocks -----------------------------------------------------
        AG = np.einsum("eqab,eqjb->eqja", self.A_vol, self.G)
        diff = np.einsum("eq,eqia,eqja->eij", self.wdet, self.G, AG)

        adv = np.einsum("eqa,eqja->eqj", self.u_vol, self.G) \
            + 0.5 * self.divu_vol[:, :, None] * phi[None, :, :]
        adv_blk = np.einsum("eq,eqj,qi->eij", self.wdet, adv, phi)
        reac = np.einsum("eq,qj,qi->eij", self.wdet * self.g0_vol, phi, phi)

        lap = np.einsum("eqab,eqjab->eqj", self.A_vol, self.Hp)
        r_trial = -lap + adv + self.g0_vol[:, :, None] * phi[None, :, :]
        s_test = adv - self.g0_vol[:, :, None] * phi[None, :, :]
        stab = np.einsum("eq,eqj,eqi->eij", self.wdet * self.tau_vol, r_trial, s_test)

        blk = diff + adv_blk + reac + stab
        edofs = np.arange(nel)[:, None] * nb + np.arange(nb)[None, :]
        rows_all.append(np.repeat(edofs, nb, axis=1).ravel())
        cols_all.append(np.tile(edofs, (1, nb)).ravel())
        data_all.append(blk.ravel())

        rhs_vol = np.einsum("eq,eq,qi->ei", self.wdet, self.g_vol, phi) \
            + np.einsum("eq,eq,eqi->ei", self.wdet * self.tau_vol, self.g_vol, s_test)
        np.add.at(rhs, edofs.ravel(), rhs_vol.ravel())

        # facet blocks ------------------------------------------------------
        def scatter(fids, side_i, side_j, blocks):
            own_i = self.owners[fids, side_i]
            own_j = self.owners[fids, side_j]
            ri = own_i[:, None, None] * nb + np.arange(nb)[None, :, None]
            cj = own_j[:, None, None] * nb + np.arange(nb)[None, None, :]
            rows_all.append(np.broadcast_to(ri, blocks.shape).ravel())
            cols_all.append(np.broadcast_to(cj, blocks.shape).ravel())
            data_all.append(blocks.ravel())

        sigma = (1.0, -1.0)  # jump sign per side under the K1->K2 orientation

        # averages/lifting on diffusive interior facets
        fi = np.nonzero(self.avg_int)[0]
        if len(fi):
            w = self.wf[fi]
            for si in (0, 1):
                for sj in (0, 1):
                    # -<{A grad c . n},[v]> : trial flux average, test jump
                    b = -0.5 * sigma[si] * np.einsum(
                        "fq,fqi,fqj->fij", w, self.V[si, fi], self.Fn[sj, fi])
                    # +<{A grad v . n},[c]> : test flux average, trial jump
                    b += 0.5 * sigma[sj] * np.einsum(
                        "fq,fqi,fqj->fij", w, self.Fn[si, fi], self.V[sj, fi])
                    scatter(fi, si, sj, b)

        # penalty on interior facets
        fi = np.nonzero(self.pen_int)[0]
        if len(fi):
            w = self.wf[fi] * self.pen_w[fi, None]
            for si in (0, 1):
                for sj in (0, 1):
                    b = sigma[si] * sigma[sj] * np.einsum(
                        "fq,fqi,fqj->fij", w, self.V[si, fi], self.V[sj, fi])
                    scatter(fi, si, sj, b)

        # pointwise upwind coupling on interior facets
        fi = np.nonzero(self.interior)[0]
        if len(fi):
            un = self.un[fi]
            w_in = self.wf[fi] * np.where(un < 0.0, un, 0.0)   # side-0 inflow
            w_out = self.wf[fi] * np.where(un > 0.0, un, 0.0)  # side-1 inflow
            # rows on side 0: -<v, u.n (c0 - c1)> where u.n < 0
            b00 = -np.einsum("fq,fqi,fqj->fij", w_in, self.V[0, fi], self.V[0, fi])
            b01 = np.einsum("fq,fqi,fqj->fij", w_in, self.V[0, fi], self.V[1, fi])
            # rows on side 1: -<v, (-u.n)(c1 - c0)> where u.n > 0
            b11 = np.einsum("fq,fqi,fqj->fij", w_out, self.V[1, fi], self.V[1, fi])
            b10 = -np.einsum("fq,fqi,fqj->fij", w_out, self.V[1, fi], self.V[0, fi])
            scatter(fi, 0, 0, b00)
            scatter(fi, 0, 1, b01)
            scatter(fi, 1, 1, b11)
            scatter(fi, 1, 0, b10)

        # boundary: upwind term on local inflow parts (jump = trace)
        fb = np.nonzero(~self.interior)[0]
        un = self.un[fb]
        w_in = self.wf[fb] * np.where(un < 0.0, un, 0.0)
        b = -np.einsum("fq,fqi,fqj->fij", w_in, self.V[0, fb], self.V[0, fb])
        scatter(fb, 0, 0, b)

        # boundary: averages/lifting and penalty on diffusion-Dirichlet facets
        fd = np.nonzero(self.avg_bnd)[0]
        kap_all = np.zeros_like(self.un)
        if len(fd) or self.pen_bnd.any():
            need = np.nonzero(self.avg_bnd | self.pen_bnd
                              | np.isin(self.partition.boundary_class,
                                        (BoundaryClass.AD_MINUS, BoundaryClass.AD_PLUS))
                              )[0]
            kap_all[need] = _eval_field(self.problem.kappa, self.Xf[need],
                                        self.elem_region, self.owners[need, 0])
        if len(fd):
            w = self.wf[fd]
            b = -np.einsum("fq,fqi,fqj->fij", w, self.V[0, fd], self.Fn[0, fd])
            b += np.einsum("fq,fqi,fqj->fij", w, self.Fn[0, fd], self.V[0, fd])
            scatter(fd, 0, 0, b)
            lift = np.einsum("fq,fq,fqi->fi", w, kap_all[fd], self.Fn[0, fd])
            np.add.at(rhs, (self.owners[fd, 0][:, None] * nb + np.arange(nb)[None, :]).ravel(),
                      lift.ravel())

        fp = np.nonzero(self.pen_bnd)[0]
        if len(fp):
            w = self.wf[fp] * self.pen_w[fp, None]
            b = np.einsum("fq,fqi,fqj->fij", w, self.V[0, fp], self.V[0, fp])
            scatter(fp, 0, 0, b)
            pen_rhs = np.einsum("fq,fq,fqi->fi", w, kap_all[fp], self.V[0, fp])
            np.add.at(rhs, (self.owners[fp, 0][:, None] * nb + np.arange(nb)[None, :]).ravel(),
                      pen_rhs.ravel())

        # boundary: inflow Dirichlet data on the advection and diffusion-
        # Dirichlet inflow portions (pointwise u.n < 0)
        bc = self.partition.boundary_class
        fk = np.nonzero(np.isin(bc, (BoundaryClass.DF_D, BoundaryClass.AD_MINUS,
                                     BoundaryClass.AD_PLUS)))[0]
        if len(fk):
            un = self.un[fk]
            w_in = self.wf[fk] * np.where(un < 0.0, un, 0.0)
            kap = kap_all[fk]
            vec = -np.einsum("fq,fq,fqi->fi", w_in, kap, self.V[0, fk])
            np.add.at(rhs, (self.owners[fk, 0][:, None] * nb + np.arange(nb)[None, :]).ravel(),
                      vec.ravel())

        # boundary: natural data on diffusion-Neumann portions
        for cls, fld in ((BoundaryClass.DF_N_MINUS, self.problem.chi_minus),
                         (BoundaryClass.DF_N_PLUS, self.problem.chi_plus)):
            fn = np.nonzero(bc == cls)[0]
            if len(fn):
                chi = _eval_field(fld, self.Xf[fn], self.elem_region, self.owners[fn, 0])
                vec = -np.einsum("fq,fq,fqi->fi", self.wf[fn], chi, self.V[0, fn])
                np.add.at(rhs, (self.owners[fn, 0][:, None] * nb + np.arange(nb)[None, :]).ravel(),
                          vec.ravel())

        rows = np.concatenate(rows_all)
        cols = np.concatenate(cols_all)
        data = np.concatenate(data_all)
        if not np.all(np.isfinite(data)) or not np.all(np.isfinite(rhs)):
            raise AssemblyError("non-finite entry produced during assembly")
        mat = sp.coo_matrix((data, (rows, cols)), shape=(ndof, ndof)).tocsr()
        mat.sum_duplicates()
        return AssembledSystem(matrix=mat, rhs=rhs, space=self.space,
                               mode=self.mode, alpha=self.alpha,
                               tau_variant=self.cfg.tau_variant,
                               degenerate_elements=self.degenerate_elements)

    # ---- energy norm -------------------------------------------------------

    def _volume_fields(self, v: np.ndarray):
        nb = self.space.n_local
        V = np.asarray(v).reshape(-1, nb)
        val = np.einsum("qb,eb->eq", self.space.phi_vol, V)
        grad = np.einsum("eqbi,eb->eqi", self.G, V)
        lap = np.einsum("eqab,eqab->eq", self.A_vol,
                        np.einsum("eqbij,eb->eqij", self.Hp, V))
        return V, val, grad, lap

    def _facet_traces(self, v: np.ndarray):
        nb = self.space.n_local
        V = np.asarray(v).reshape(-1, nb)
        t0 = np.einsum("fqb,fb->fq", self.V[0], V[np.maximum(self.owners[:, 0], 0)])
        t1 = np.einsum("fqb,fb->fq", self.V[1], V[np.maximum(self.owners[:, 1], 0)])
        t1[~self.interior] = 0.0
        return t0, t1

    def energy_terms(self, v: np.ndarray) -> dict:
        """Individual squared contributions of the energy norm of a DOF
        vector, matching the assembled bilinear form at (v, v)."""
        V, val, grad, lap = self._volume_fields(v)
        Agrad = np.einsum("eqab,eqb->eqa", self.A_vol, grad)
        diff = float(np.einsum("eq,eqa,eqa->", self.wdet, grad, Agrad))

        t0, t1 = self._facet_traces(v)
        jump = t0 - t1
        pen = float((self.wf * self.pen_w[:, None] * jump ** 2)[self.pen_int].sum())
        pen += float((self.wf * self.pen_w[:, None] * t0 ** 2)[self.pen_bnd].sum())

        absun = np.abs(self.un)
        adv = 0.5 * float((self.wf * absun * jump ** 2)[self.interior].sum())
        adv += 0.5 * float((self.wf * absun * t0 ** 2)[~self.interior].sum())

        reac = float(np.einsum("eq,eq->", self.wdet * self.g0_vol, val ** 2))

        stream = np.einsum("eqa,eqa->eq", self.u_vol, grad) + 0.5 * self.divu_vol * val
        r_v = -lap + stream + self.g0_vol * val
        s_v = stream - self.g0_vol * val
        stab = float(np.einsum("eq,eq,eq->", self.wdet * self.tau_vol, r_v, s_v))
        supg = float(np.einsum("eq,eq->", self.wdet * self.tau_vol, stream ** 2))

        total = diff + pen + adv + reac + stab
        return {
            "diffusion": diff,
            "penalty": pen,
            "advection_jumps": adv,
            "reaction": reac,
            "stabilization": stab,
            "total_sq": total,
            "supg_streamline_sq": supg,
        }

    def energy_norm(self, v: np.ndarray) -> float:
        return float(np.sqrt(max(self.energy_terms(v)["total_sq"], 0.0)))

    # ---- advection identities ----------------------------------------------

    def _adv_volume(self, v, w) -> float:
        nb = self.space.n_local
        Vv = np.asarray(v).reshape(-1, nb)
        Vw = np.asarray(w).reshape(-1, nb)
        val_v = np.einsum("qb,eb->eq", self.space.phi_vol, Vv)
        grad_v = np.einsum("eqbi,eb->eqi", self.G, Vv)
        val_w = np.einsum("qb,eb->eq", self.space.phi_vol, Vw)
        stream = np.einsum("eqa,eqa->eq", self.u_vol, grad_v) + 0.5 * self.divu_vol * val_v
        return float(np.einsum("eq,eq,eq->", self.wdet, stream, val_w))

    def _upwind(self, v, w) -> float:
        """- sum_K <w, u.n [v]> over the local inflow boundaries."""
        tv0, tv1 = self._facet_traces(v)
        tw0, tw1 = self._facet_traces(w)
        un = self.un
        interior = self.interior
        w_in0 = np.where(un < 0.0, un, 0.0)
        out = -float((self.wf * w_in0 * tw0 * (tv0 - tv1))[interior].sum())
        w_in1 = np.where(-un < 0.0, -un, 0.0)
        out -= float((self.wf * w_in1 * tw1 * (tv1 - tv0))[interior].sum())
        out -= float((self.wf * w_in0 * tw0 * tv0)[~interior].sum())
        return out

    def _downwind(self, v, w) -> float:
        """+ sum_K <w, u.n [v]> over the local outflow boundaries."""
        tv0, tv1 = self._facet_traces(v)
        tw0, tw1 = self._facet_traces(w)
        un = self.un
        interior = self.interior
        w_out0 = np.where(un >= 0.0, un, 0.0)
        out = float((self.wf * w_out0 * tw0 * (tv0 - tv1))[interior].sum())
        w_out1 = np.where(-un >= 0.0, -un, 0.0)
        out += float((self.wf * w_out1 * tw1 * (tv1 - tv0))[interior].sum())
        out += float((self.wf * w_out0 * tw0 * tv0)[~interior].sum())
        return out

    def advection_identity_check(self, v, w) -> dict:
        """Residuals of the advection coercivity and duality identities."""
        tv0, tv1 = self._facet_traces(v)
        lhs_c = self._adv_volume(v, v) + self._upwind(v, v)
        jump_sq = 0.5 * float((self.wf * np.abs(self.un) * (tv0 - tv1) ** 2)[self.interior].sum())
        bnd_sq = 0.5 * float((self.wf * np.abs(self.un) * tv0 ** 2)[~self.interior].sum())
        rhs_c = jump_sq + bnd_sq
        scale_c = abs(lhs_c) + abs(rhs_c) + 1e-300

        lhs_d = self._adv_volume(v, w) + self._upwind(v, w)
        rhs_d = -self._adv_volume(w, v) + self._downwind(w, v)
        scale_d = abs(self._adv_volume(v, w)) + abs(self._adv_volume(w, v)) \
            + abs(self._upwind(v, w)) + abs(self._downwind(w, v)) + 1e-300
        return {
            "coercivity_residual": abs(lhs_c - rhs_c),
            "coercivity_scale": scale_c,
            "duality_residual": abs(lhs_d - rhs_d),
            "duality_scale": scale_d,
        }


# ---- functional wrappers ---------------------------------------------------

def assemble(space: DGSpace, problem: ProblemData, partition: FacetPartition,
             mode: str = "minimal_dfd",
             cfg: StabilizationConfig | None = None) -> AssembledSystem:
    return Assembler(space, problem, partition, cfg, mode).system()


def dg_energy_norm(space: DGSpace, problem: ProblemData, partition: FacetPartition,
                   cfg: StabilizationConfig | None, v: np.ndarray,
                   mode: str = "minimal_dfd") -> float:
    return Assembler(space, problem, partition, cfg, mode).energy_norm(v)


def tau_K(asm: Assembler, element: int) -> np.ndarray:
    """Stabilization parameter samples at the element's volume quadrature
    points (constant per element for the dk variant)."""
    return asm.tau_vol[element]


def compute_D_K(space: DGSpace, problem: ProblemData, partition: FacetPartition,
                cfg: StabilizationConfig | None = None) -> np.ndarray:
    return Assembler(space, problem, partition, cfg).D_K


def advection_identity_check(space: DGSpace, problem: ProblemData,
                             partition: FacetPartition, v, w) -> dict:
    return Assembler(space, problem, partition).advection_identity_check(v, w)
