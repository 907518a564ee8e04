"""Sparse linear solves for the assembled DG systems.

Wraps scipy's sparse direct factorization (default) and preconditioned
GMRES for larger systems; both return the solution together with a small
report (residual, iterations, timing).
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


class SingularSystemError(Exception):
    pass


class ConvergenceFailureError(Exception):
    pass


@dataclass
class SolverConfig:
    method: str = "direct_lu"      # or "krylov"
    rtol: float = 1e-10            # residual check for the direct solve
    krylov_tol: float = 1e-8
    restart: int = 100
    maxiter: int = 2000
    ilu_drop_tol: float = 1e-5
    ilu_fill_factor: float = 20.0


@dataclass
class SolveReport:
    method: str
    residual: float
    iterations: int
    seconds: float
    n_dofs: int


def solve(matrix: sp.spmatrix, rhs: np.ndarray,
          config: Optional[SolverConfig] = None) -> tuple[np.ndarray, SolveReport]:
    cfg = config or SolverConfig()
    A = matrix.tocsc()
    b = np.asarray(rhs, dtype=float)
    bnorm = np.linalg.norm(b)
    t0 = time.perf_counter()

    if cfg.method == "direct_lu":
        try:
            lu = spla.splu(A)
        except RuntimeError as exc:
            raise SingularSystemError(f"sparse LU factorization failed: {exc}") from exc
        x = lu.solve(b)
        if not np.all(np.isfinite(x)):
            raise SingularSystemError("direct solve produced non-finite values")
        res = np.linalg.norm(A @ x - b) / (bnorm if bnorm > 0 else 1.0)
        if res > cfg.rtol:
            raise SingularSystemError(
                f"direct solve residual {res:.3e} exceeds {cfg.rtol:.1e}; "
                "system is singular or severely ill-conditioned")
        iters = 1
    elif cfg.method == "krylov":
        try:
            ilu = spla.spilu(A, drop_tol=cfg.ilu_drop_tol,
                             fill_factor=cfg.ilu_fill_factor)
        except RuntimeError as exc:
            raise SingularSystemError(f"ILU preconditioner failed: {exc}") from exc
        M = spla.LinearOperator(A.shape, ilu.solve)
        count = [0]

        def cb(_):
            count[0] += 1

        x, info = spla.gmres(A, b, rtol=cfg.krylov_tol, atol=0.0,
                             restart=cfg.restart, maxiter=cfg.maxiter,
                             M=M, callback=cb, callback_type="pr_norm")
        if info != 0:
            res = np.linalg.norm(A @ x - b) / (bnorm if bnorm > 0 else 1.0)
            raise ConvergenceFailureError(
                f"GMRES stopped with info={info} after {count[0]} iterations "
                f"(relative residual {res:.3e})")
        res = np.linalg.norm(A @ x - b) / (bnorm if bnorm > 0 else 1.0)
        iters = count[0]
    else:
        raise ValueError(f"unknown solver method {cfg.method!r}")

    return x, SolveReport(method=cfg.method, residual=float(res),
                          iterations=iters,
                          seconds=time.perf_counter() - t0,
                          n_dofs=A.shape[0])
