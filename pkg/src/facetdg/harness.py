"""Verification harness: convergence studies, consistency residuals,
penalty-mode comparison, and algebraic identity checks.

All artifacts (CSV/JSON) are written with fixed column order and explicit
'%.17g' float formatting so repeated runs are byte-identical.
"""
from __future__ import annotations

import csv
import json
import math
import os
from typing import Optional, Sequence

import numpy as np

from .assembly import Assembler, StabilizationConfig, _eval_field
from .mesh import build_structured_triangular
from .partition import InteriorClass, classify
from .problem import (ProblemData, builtin_problem, constant_field,
                      vector_field)
from .solver import SolverConfig, solve
from .space import DGSpace

_FMT = "%.17g"


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if isinstance(v, float):
        return _FMT % v
    return str(v)


def affine_velocity_problem() -> ProblemData:
    """Constant diffusion with an affine, compressible velocity; used by the
    identity checks, which are exact at quadrature level for affine u."""
    def u(pts):
        return np.stack([0.4 + 0.3 * pts[:, 0] - 0.2 * pts[:, 1],
                         -0.2 + 0.1 * pts[:, 1] + 0.5 * pts[:, 0]], axis=1)

    zero = constant_field(0.0)
    return ProblemData(
        A=constant_field(0.5 * np.eye(2)),
        u=vector_field(u),
        div_u=constant_field(0.4),
        gamma=constant_field(1.0),
        g=zero,
        kappa=zero,
        chi_minus=zero,
        chi_plus=zero,
        dirichlet_predicate=lambda pts: np.ones(len(np.atleast_2d(pts)), dtype=bool),
        name="affine_velocity",
    )


# ---------------------------------------------------------------------------
# error evaluation
# ---------------------------------------------------------------------------

def _error_assembler(mesh, problem, degree, cfg, mode) -> Assembler:
    """Assembler twin on the same basis with quadrature raised by two
    polynomial degrees, used only for error integration."""
    space = DGSpace(mesh, degree, quad_bump=2)
    part = classify(mesh, problem)
    return Assembler(space, problem, part, cfg, mode)


def compute_errors(asm: Assembler, dofs: np.ndarray) -> dict:
    """L2 and energy errors of a DOF vector against the problem's exact
    solution, with per-region L2 split for piecewise problems."""
    problem = asm.problem
    if problem.exact is None:
        raise ValueError("problem has no exact solution")
    space = asm.space
    owners = np.arange(space.mesh.n_elements)
    ex_val = _eval_field(problem.exact.value, asm.X_vol, asm.elem_region, owners)
    ex_grad = _eval_field(problem.exact.grad, asm.X_vol, asm.elem_region, owners)

    V, val_h, grad_h, lap_h = asm._volume_fields(dofs)
    e_val = ex_val - val_h
    e_grad = ex_grad - grad_h

    l2_sq_elem = np.einsum("eq,eq->e", asm.wdet, e_val ** 2)
    l2 = float(np.sqrt(l2_sq_elem.sum()))
    ex_l2_sq = np.einsum("eq,eq->e", asm.wdet, ex_val ** 2)

    out = {"l2": l2, "l2_rel": l2 / max(math.sqrt(ex_l2_sq.sum()), 1e-300)}
    if asm.elem_region is not None:
        for r in np.unique(asm.elem_region):
            m = asm.elem_region == r
            out[f"l2_region{r}"] = float(np.sqrt(l2_sq_elem[m].sum()))

    # energy norm of the error
    diff = float(np.einsum("eq,eqa,eqab,eqb->", asm.wdet, e_grad, asm.A_vol, e_grad))

    t0, t1 = asm._facet_traces(dofs)
    own = asm.owners
    ex0 = _eval_field(problem.exact.value, asm.Xf, asm.elem_region, own[:, 0])
    ex1 = np.zeros_like(ex0)
    fi = np.nonzero(asm.interior)[0]
    if len(fi):
        ex1[fi] = _eval_field(problem.exact.value, asm.Xf[fi], asm.elem_region, own[fi, 1])
    e0 = ex0 - t0
    e1 = ex1 - t1
    jump = e0 - e1
    pen = float((asm.wf * asm.pen_w[:, None] * jump ** 2)[asm.pen_int].sum())
    pen += float((asm.wf * asm.pen_w[:, None] * e0 ** 2)[asm.pen_bnd].sum())
    absun = np.abs(asm.un)
    adv = 0.5 * float((asm.wf * absun * jump ** 2)[asm.interior].sum())
    adv += 0.5 * float((asm.wf * absun * e0 ** 2)[~asm.interior].sum())
    reac = float(np.einsum("eq,eq->", asm.wdet * asm.g0_vol, e_val ** 2))

    stab = 0.0
    if problem.exact.hess is not None:
        ex_h = _eval_field(problem.exact.hess, asm.X_vol, asm.elem_region, owners)
        ex_lap = np.einsum("eqab,eqab->eq", asm.A_vol, ex_h)
        e_lap = ex_lap - lap_h
        stream = np.einsum("eqa,eqa->eq", asm.u_vol, e_grad) + 0.5 * asm.divu_vol * e_val
        r_e = -e_lap + stream + asm.g0_vol * e_val
        s_e = stream - asm.g0_vol * e_val
        stab = float(np.einsum("eq,eq,eq->", asm.wdet * asm.tau_vol, r_e, s_e))

    out["energy"] = float(np.sqrt(max(diff + pen + adv + reac + stab, 0.0)))
    return out


# ---------------------------------------------------------------------------
# convergence study
# ---------------------------------------------------------------------------

def run_convergence(problem: ProblemData, degree: int,
                    levels: Sequence[int] = (8, 16, 32),
                    mode: str = "minimal_dfd",
                    cfg: Optional[StabilizationConfig] = None,
                    solver_cfg: Optional[SolverConfig] = None,
                    out: Optional[str] = None) -> dict:
    """Solve on a sequence of uniform refinements and report errors and
    experimental convergence orders. `out` is a path prefix for the CSV and
    JSON artifacts."""
    rows = []
    for n in levels:
        mesh = build_structured_triangular(n)
        space = DGSpace(mesh, degree)
        part = classify(mesh, problem)
        asm = Assembler(space, problem, part, cfg, mode)
        system = asm.system()
        x, rep = solve(system.matrix, system.rhs, solver_cfg)
        err_asm = _error_assembler(mesh, problem, degree, cfg, mode)
        errs = compute_errors(err_asm, x)
        row = {
            "n": int(n),
            "h": float(mesh.diameters.max()),
            "n_dofs": int(space.n_dofs),
            "l2_error": errs["l2"],
            "energy_error": errs["energy"],
            "solver_residual": rep.residual,
        }
        for k, v in errs.items():
            if k.startswith("l2_region"):
                row[k] = v
        rows.append(row)

    for i, row in enumerate(rows):
        if i == 0:
            row["eoc_l2"] = float("nan")
            row["eoc_energy"] = float("nan")
        else:
            prev = rows[i - 1]
            dh = math.log(prev["h"] / row["h"])
            row["eoc_l2"] = math.log(prev["l2_error"] / row["l2_error"]) / dh \
                if row["l2_error"] > 0 and prev["l2_error"] > 0 else float("nan")
            row["eoc_energy"] = math.log(prev["energy_error"] / row["energy_error"]) / dh \
                if row["energy_error"] > 0 and prev["energy_error"] > 0 else float("nan")

    result = {
        "problem": problem.name,
        "degree": degree,
        "mode": mode,
        "levels": [int(n) for n in levels],
        "rows": rows,
    }
    if out:
        write_convergence_artifacts(result, out)
    return result


_CSV_COLUMNS = ("n", "h", "n_dofs", "l2_error", "energy_error",
                "eoc_l2", "eoc_energy", "solver_residual")


def write_convergence_artifacts(result: dict, prefix: str) -> tuple[str, str]:
    os.makedirs(os.path.dirname(prefix) or ".", exist_ok=True)
    extra = sorted({k for row in result["rows"] for k in row} - set(_CSV_COLUMNS))
    cols = list(_CSV_COLUMNS) + extra
    csv_path = prefix + ".csv"
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in result["rows"]:
            w.writerow([_fmt(row.get(c)) for c in cols])
    json_path = prefix + ".json"
    doc = {
        "problem": result["problem"],
        "degree": result["degree"],
        "mode": result["mode"],
        "levels": result["levels"],
        "rows": [{k: (_FMT % v if isinstance(v, float) else v)
                  for k, v in sorted(row.items())} for row in result["rows"]],
    }
    with open(json_path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return csv_path, json_path


# ---------------------------------------------------------------------------
# consistency
# ---------------------------------------------------------------------------

def run_consistency(problem: ProblemData, n: int, degree: int,
                    mode: str = "minimal_dfd",
                    cfg: Optional[StabilizationConfig] = None) -> dict:
    """Residual of the assembled system at the L2 projection of the exact
    solution; near zero whenever the exact solution lies in the broken
    space."""
    if problem.exact is None:
        raise ValueError("problem has no exact solution")
    mesh = build_structured_triangular(n)
    space = DGSpace(mesh, degree)
    part = classify(mesh, problem)
    system = Assembler(space, problem, part, cfg, mode).system()
    proj = space.l2_project(problem.exact.value, region_of=problem.region_of)
    res = system.matrix @ proj - system.rhs
    scale = max(float(np.abs(system.rhs).max()), 1e-300)
    return {
        "problem": problem.name,
        "n": n,
        "degree": degree,
        "residual_inf": float(np.abs(res).max()),
        "residual_rel": float(np.abs(res).max()) / scale,
        "rhs_inf": scale,
    }


# ---------------------------------------------------------------------------
# penalty-mode comparison on the degenerate interface
# ---------------------------------------------------------------------------

def compare_penalty_modes(n: int = 32, degree: int = 1,
                          modes: Sequence[str] = ("minimal_dfd", "legacy_all"),
                          cfg: Optional[StabilizationConfig] = None,
                          out: Optional[str] = None) -> dict:
    """Solve the piecewise elliptic/hyperbolic benchmark under several
    penalty modes and measure how well each preserves the solution jump
    across the degenerate interface."""
    problem = builtin_problem("degenerate_interface")
    mesh = build_structured_triangular(n)
    part = classify(mesh, problem)
    iface = np.isin(part.interior_class,
                    (InteriorClass.AD_DF_PLUS, InteriorClass.AD_DF_MINUS))
    if not iface.any():
        raise RuntimeError("no mixed-regime interior facets found")

    results = {"n": n, "degree": degree, "modes": {}}
    err_asm0 = None
    for mode in modes:
        space = DGSpace(mesh, degree)
        asm = Assembler(space, problem, part, cfg, mode)
        system = asm.system()
        x, _ = solve(system.matrix, system.rhs)

        err_asm = _error_assembler(mesh, problem, degree, cfg, mode)
        if err_asm0 is None:
            err_asm0 = err_asm
            own = err_asm.owners
            ex0 = _eval_field(problem.exact.value, err_asm.Xf,
                              err_asm.elem_region, own[:, 0])
            ex1 = ex0.copy()
            fi = np.nonzero(err_asm.interior)[0]
            ex1[fi] = _eval_field(problem.exact.value, err_asm.Xf[fi],
                                  err_asm.elem_region, own[fi, 1])
            wsum = err_asm.wf[iface].sum()
            exact_mean = float((err_asm.wf[iface] * np.abs(ex0 - ex1)[iface]).sum() / wsum)
        t0, t1 = err_asm._facet_traces(x)
        mean_jump = float((err_asm.wf[iface] * np.abs(t0 - t1)[iface]).sum()
                          / err_asm.wf[iface].sum())
        errs = compute_errors(err_asm, x)
        results["modes"][mode] = {
            "mean_interface_jump": mean_jump,
            "l2_error": errs["l2"],
            "l2_elliptic_side": errs.get("l2_region0", float("nan")),
            "l2_hyperbolic_side": errs.get("l2_region1", float("nan")),
        }
    results["exact_mean_interface_jump"] = exact_mean
    if out:
        os.makedirs(os.path.dirname(out) or ".", exist_ok=True)
        with open(out, "w") as fh:
            json.dump(results, fh, indent=2, sort_keys=True, default=lambda v: _FMT % v)
            fh.write("\n")
    return results


# ---------------------------------------------------------------------------
# identity suite
# ---------------------------------------------------------------------------

def run_identity_suite(problem: Optional[ProblemData] = None, n: int = 8,
                       degree: int = 1, seed: int = 0, trials: int = 100,
                       cfg: Optional[StabilizationConfig] = None,
                       mode: str = "minimal_dfd") -> dict:
    """Maximum relative residuals, over random DOF vectors, of:
      * the quadratic identity  B(v, v) == energy-norm terms of v,
      * the advection coercivity identity (volume + upwind == jump sums),
      * the advection duality identity (adjoint form of the upwind split).
    """
    problem = problem or affine_velocity_problem()
    mesh = build_structured_triangular(n)
    space = DGSpace(mesh, degree)
    part = classify(mesh, problem)
    asm = Assembler(space, problem, part, cfg, mode)
    system = asm.system()
    M = system.matrix

    rng = np.random.default_rng(seed)
    worst = {"norm_identity": 0.0, "adv_coercivity": 0.0, "adv_duality": 0.0}
    for _ in range(trials):
        v = rng.standard_normal(space.n_dofs)
        w = rng.standard_normal(space.n_dofs)
        quad = float(v @ (M @ v))
        terms = asm.energy_terms(v)
        scale = sum(abs(terms[k]) for k in
                    ("diffusion", "penalty", "advection_jumps", "reaction",
                     "stabilization")) + 1e-300
        worst["norm_identity"] = max(worst["norm_identity"],
                                     abs(quad - terms["total_sq"]) / scale)
        ids = asm.advection_identity_check(v, w)
        worst["adv_coercivity"] = max(worst["adv_coercivity"],
                                      ids["coercivity_residual"] / ids["coercivity_scale"])
        worst["adv_duality"] = max(worst["adv_duality"],
                                   ids["duality_residual"] / ids["duality_scale"])
    worst.update(problem=problem.name, n=n, degree=degree,
                 seed=seed, trials=trials)
    return worst
