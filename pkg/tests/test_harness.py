import json
import os

import numpy as np
import pytest

from facetdg.harness import (affine_velocity_problem, compare_penalty_modes,
                             run_consistency, run_convergence,
                             run_identity_suite, write_convergence_artifacts)
from facetdg.problem import builtin_problem


def test_consistency_polynomial_solution():
    p = builtin_problem("polynomial_exactness", degree=2)
    res = run_consistency(p, n=4, degree=2)
    assert res["residual_rel"] < 1e-12


def test_consistency_requires_exact_solution():
    p = affine_velocity_problem()
    with pytest.raises(ValueError, match="exact"):
        run_consistency(p, n=2, degree=1)


def test_convergence_pure_diffusion_small():
    p = builtin_problem("pure_diffusion")
    res = run_convergence(p, 1, (4, 8))
    rows = res["rows"]
    assert rows[1]["eoc_l2"] == pytest.approx(2.0, abs=0.2)
    assert rows[1]["eoc_energy"] == pytest.approx(1.0, abs=0.2)
    assert rows[0]["h"] == pytest.approx(np.sqrt(2) / 4)
    assert all(r["solver_residual"] < 1e-12 for r in rows)


def test_convergence_artifacts_deterministic(tmp_path):
    p = builtin_problem("pure_diffusion")
    outs = []
    for tag in ("a", "b"):
        prefix = str(tmp_path / f"conv_{tag}")
        run_convergence(p, 1, (2, 4), out=prefix)
        with open(prefix + ".csv", "rb") as fh:
            csv_bytes = fh.read()
        with open(prefix + ".json", "rb") as fh:
            json_bytes = fh.read()
        outs.append((csv_bytes, json_bytes))
    assert outs[0] == outs[1]
    header = outs[0][0].split(b"\n", 1)[0].decode()
    assert header.startswith("n,h,n_dofs,l2_error,energy_error,eoc_l2,eoc_energy")
    doc = json.loads(outs[0][1])
    assert doc["problem"] == "pure_diffusion"
    assert len(doc["rows"]) == 2


def test_write_artifacts_creates_directories(tmp_path):
    p = builtin_problem("pure_diffusion")
    res = run_convergence(p, 1, (2,))
    prefix = str(tmp_path / "deep" / "nested" / "out")
    csv_path, json_path = write_convergence_artifacts(res, prefix)
    assert os.path.exists(csv_path) and os.path.exists(json_path)


def test_identity_suite_defaults():
    res = run_identity_suite(n=4, degree=1, trials=10, seed=3)
    assert res["norm_identity"] < 1e-12
    assert res["adv_coercivity"] < 1e-12
    assert res["adv_duality"] < 1e-12
    assert res["problem"] == "affine_velocity"


def test_compare_penalty_modes_structure(tmp_path):
    out = str(tmp_path / "cmp.json")
    res = compare_penalty_modes(n=8, degree=1, out=out)
    assert set(res["modes"]) == {"minimal_dfd", "legacy_all"}
    assert res["exact_mean_interface_jump"] > 1.0
    minimal = res["modes"]["minimal_dfd"]
    legacy = res["modes"]["legacy_all"]
    # even on a coarse mesh the qualitative picture must hold
    assert minimal["mean_interface_jump"] > legacy["mean_interface_jump"]
    assert legacy["l2_hyperbolic_side"] > minimal["l2_hyperbolic_side"]
    assert os.path.exists(out)


def test_region_split_columns_present():
    p = builtin_problem("degenerate_interface")
    res = run_convergence(p, 1, (4,))
    row = res["rows"][0]
    assert "l2_region0" in row and "l2_region1" in row
