"""Command-line verification front end.

Subcommands: mesh-info, partition-report, convergence, consistency,
identities, compare-penalties. A key=value config file can preset any flag;
explicit command-line flags win. Exit status is zero iff all checks of the
invoked subcommand pass.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from .assembly import StabilizationConfig
from .harness import (affine_velocity_problem, compare_penalty_modes,
                      run_consistency, run_convergence, run_identity_suite)
from .mesh import build_structured_triangular, mesh_quality_report
from .partition import classify, partition_report_rows
from .problem import BUILTIN_NAMES, builtin_problem, custom_problem
from .solver import SolverConfig

_MODE_ALIASES = {"minimal": "minimal_dfd", "full-df": "full_df",
                 "legacy-all": "legacy_all"}
_TAU_ALIASES = {"pointwise": "pointwise", "dk": "dk_based"}


def _load_config(path: str) -> dict:
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"bad config line (expected key=value): {line!r}")
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="facetdg",
                                description="facet-classified DG verification harness")
    p.add_argument("--config", help="key=value file presetting any flag")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, problem=True):
        if problem:
            sp.add_argument("--problem", default="pure_diffusion",
                            help=f"builtin name {BUILTIN_NAMES} or 'custom'")
        sp.add_argument("--n", type=int, default=8, help="mesh subdivisions per side")
        sp.add_argument("--degree", type=int, default=1, choices=(1, 2, 3, 4))
        sp.add_argument("--mode", default="minimal",
                        choices=sorted(_MODE_ALIASES), help="penalty mode")
        sp.add_argument("--alpha", type=float, default=None,
                        help="stabilization strength (default: auto-safe)")
        sp.add_argument("--tau", default="pointwise", choices=sorted(_TAU_ALIASES),
                        help="stabilization parameter variant")
        sp.add_argument("--epsilon", type=float, default=1e-6,
                        help="diffusion magnitude for advection_dominated")
        sp.add_argument("--solver", default="direct_lu",
                        choices=("direct_lu", "krylov"))
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", default=None, help="output path or prefix")

    sp = sub.add_parser("mesh-info", help="mesh size and quality ratios")
    common(sp, problem=False)

    sp = sub.add_parser("partition-report", help="per-facet classification CSV")
    common(sp)

    sp = sub.add_parser("convergence", help="refinement study with EOC table")
    common(sp)
    sp.add_argument("--levels", default="8,16,32",
                    help="comma-separated mesh subdivisions")
    sp.add_argument("--expect-eoc", type=float, default=None,
                    help="fail unless the final L2 EOC reaches this value")

    sp = sub.add_parser("consistency", help="residual at the projected exact solution")
    common(sp)
    sp.add_argument("--tol", type=float, default=1e-9)

    sp = sub.add_parser("identities", help="energy-norm and advection identity checks")
    common(sp)
    sp.set_defaults(problem="affine_velocity")
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--tol", type=float, default=1e-10)

    sp = sub.add_parser("compare-penalties", help="penalty modes on the degenerate interface")
    common(sp)
    return p


def _resolve(args) -> None:
    if args.config:
        presets = _load_config(args.config)
        defaults = build_parser().parse_args([args.command]).__dict__
        for k, v in presets.items():
            key = k.replace("-", "_")
            if not hasattr(args, key):
                raise ValueError(f"unknown config key {k!r}")
            # command line beats config: only apply where the flag kept its default
            if getattr(args, key) == defaults.get(key):
                cur = getattr(args, key)
                cast = type(cur) if cur is not None and not isinstance(cur, bool) else str
                setattr(args, key, cast(v) if cast is not str else v)


def _problem(args):
    if args.problem == "custom":
        if not args.config:
            raise ValueError("custom problem requires --config with coefficient expressions")
        return custom_problem(_load_config(args.config))
    return builtin_problem(args.problem, degree=args.degree, eps=args.epsilon)


def _stab(args) -> StabilizationConfig:
    return StabilizationConfig(alpha=args.alpha, tau_variant=_TAU_ALIASES[args.tau])


def _solver(args) -> SolverConfig:
    return SolverConfig(method=args.solver)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _resolve(args)
    ok = True

    if args.command == "mesh-info":
        mesh = build_structured_triangular(args.n)
        rep = mesh_quality_report(mesh)
        print(json.dumps({
            "n": args.n,
            "n_vertices": len(mesh.vertices),
            "n_elements": mesh.n_elements,
            "n_facets": mesh.n_facets,
            "n_boundary_facets": int(mesh.boundary_mask.sum()),
            "h_max": float(mesh.diameters.max()),
            "max_shape_ratio": rep["max_shape_ratio"],
            "max_nonconformity_ratio": rep["max_nonconformity_ratio"],
        }, indent=2, sort_keys=True))

    elif args.command == "partition-report":
        problem = _problem(args)
        mesh = build_structured_triangular(args.n)
        part = classify(mesh, problem)
        rows = partition_report_rows(mesh, part)
        counts = {**part.interior_counts(), **part.boundary_counts()}
        if args.out:
            with open(args.out, "w", newline="") as fh:
                w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
                w.writeheader()
                w.writerows(rows)
        print(json.dumps({"n": args.n, "problem": problem.name, "counts": counts},
                         indent=2, sort_keys=True))

    elif args.command == "convergence":
        problem = _problem(args)
        levels = [int(s) for s in args.levels.split(",")]
        res = run_convergence(problem, args.degree, levels,
                              mode=_MODE_ALIASES[args.mode], cfg=_stab(args),
                              solver_cfg=_solver(args), out=args.out)
        for row in res["rows"]:
            print(f"n={row['n']:4d}  h={row['h']:.4e}  "
                  f"L2={row['l2_error']:.6e} (eoc {row['eoc_l2']:5.2f})  "
                  f"energy={row['energy_error']:.6e} (eoc {row['eoc_energy']:5.2f})")
        if args.expect_eoc is not None:
            final = res["rows"][-1]["eoc_l2"]
            ok = np.isfinite(final) and final >= args.expect_eoc
            print(f"final L2 EOC {final:.3f} "
                  f"{'meets' if ok else 'MISSES'} threshold {args.expect_eoc}")

    elif args.command == "consistency":
        problem = _problem(args)
        res = run_consistency(problem, args.n, args.degree,
                              mode=_MODE_ALIASES[args.mode], cfg=_stab(args))
        ok = res["residual_rel"] <= args.tol
        print(json.dumps({**res, "tol": args.tol, "pass": bool(ok)},
                         indent=2, sort_keys=True))

    elif args.command == "identities":
        problem = affine_velocity_problem() if args.problem == "affine_velocity" \
            else _problem(args)
        res = run_identity_suite(problem, n=args.n, degree=args.degree,
                                 seed=args.seed, trials=args.trials,
                                 cfg=_stab(args), mode=_MODE_ALIASES[args.mode])
        ok = all(res[k] <= args.tol for k in
                 ("norm_identity", "adv_coercivity", "adv_duality"))
        print(json.dumps({**res, "tol": args.tol, "pass": bool(ok)},
                         indent=2, sort_keys=True))

    elif args.command == "compare-penalties":
        res = compare_penalty_modes(args.n, args.degree, cfg=_stab(args),
                                    out=args.out)
        print(json.dumps(res, indent=2, sort_keys=True))

    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
