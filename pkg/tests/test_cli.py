import json
import math
from pathlib import Path

import pytest

from repdyn import fileformat as ff
from repdyn.cli import run_command
from repdyn.explorer import SearchSpec

SCEN = Path(__file__).resolve().parents[1] / "scenarios"


def run(capsys, *argv):
    code = run_command([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_weyl(capsys):
    code, out, _ = run(capsys, "weyl", 2, 1, 0)
    assert code == 0 and out.strip() == "1/3 e1e1e2 + 1/3 e1e2e1 + 1/3 e2e1e1"


@pytest.mark.parametrize("name, code", [("so3", 0), ("sl2", 0), ("abelian", 0), ("broken_jacobi", 1)])
def test_pbw_exit_codes(capsys, name, code):
    c, out, _ = run(capsys, "pbw", SCEN / f"{name}_alg.json")
    assert c == code
    assert ("pass true" in out) == (code == 0)


def test_pbw_exact_flag(capsys):
    c, out, _ = run(capsys, "pbw", SCEN / "broken_jacobi_alg.json", "--exact")
    assert c == 1 and "quotient_dims 1 4 10 19" in out


def test_check_rep_abelian_vs_pauli(capsys):
    code, out, _ = run(capsys, "check-rep", SCEN / "abelian_alg.json", SCEN / "pauli.json")
    assert code == 1
    assert f"max_residual {2 * math.sqrt(2):.17g}" in out
    assert "feasible false" in out


def test_check_rep_weyl_vs_pauli(capsys):
    # [s1, s2] - I = 2i s3 - I has Frobenius norm sqrt(8 + 2)
    code, out, _ = run(capsys, "check-rep", SCEN / "weyl_alg.json", SCEN / "pauli.json")
    assert code == 1
    line = next(l for l in out.splitlines() if l.startswith("max_residual"))
    assert float(line.split()[1]) == pytest.approx(math.sqrt(10), abs=1e-15)


def test_check_rep_feasible(capsys):
    code, out, _ = run(capsys, "check-rep", SCEN / "sl2_alg.json", SCEN / "sl2_rep.json")
    assert code == 0 and "feasible true" in out


def test_simulate_so3(capsys, tmp_path):
    out = tmp_path / "traj.csv"
    code, _, err = run(capsys, "simulate", SCEN / "so3.json", "--out", out)
    assert code == 0 and "samples 6285" in err
    rows = ff.read_trajectory(out)
    assert max(float(r["max_residual"]) for r in rows) <= 1e-8
    assert all(r["feasible"] == "1" for r in rows)


def test_simulate_reports_infeasible(capsys, tmp_path):
    raw = json.loads((SCEN / "so3.json").read_text())
    raw["pair_mode"]["algebra"] = {"m": 3, "A": [], "B": [], "C": []}
    raw["t1"], raw["h"] = 0.1, 0.05
    scen = tmp_path / "s.json"
    scen.write_text(json.dumps(raw))
    code, _, err = run(capsys, "simulate", scen, "--out", tmp_path / "t.csv")
    assert code == 1 and "first_infeasible_sample 0" in err


def test_simulate_blowup(capsys, tmp_path):
    raw = json.loads((SCEN / "minimal.json").read_text())
    raw["symbols"][0][0]["state_exponents"] = [5]
    raw["symbols"][0][0]["coeff"] = [1.0, 0.0]
    raw["X0"] = [[[[1e10, 0.0]]]]
    raw["h"] = 1.0
    raw["t1"] = 2.0
    scen = tmp_path / "s.json"
    scen.write_text(json.dumps(raw))
    code, _, err = run(capsys, "simulate", scen, "--out", tmp_path / "t.csv")
    assert code == 1 and "blowup" in err


@pytest.mark.parametrize(
    "argv",
    [[], ["frobnicate"], ["simulate", "so3.json"], ["weyl", "x"], ["pbw", "missing.json"], ["simulate", "pauli.json", "--out", "x.csv"]],
)
def test_usage_errors(capsys, argv, tmp_path, monkeypatch):
    monkeypatch.chdir(SCEN)
    if "--out" in argv:
        argv[-1] = str(tmp_path / argv[-1])
    code, out, err = run(capsys, *argv)
    assert code == 2 and out == "" and err


def test_fit(capsys, tmp_path):
    code, _, _ = run(capsys, "fit", SCEN / "sl2_rep.json", "--out", tmp_path / "fit.json")
    assert code == 0
    got, want = ff.load_algebra(tmp_path / "fit.json"), ff.load_algebra(SCEN / "sl2_alg.json")
    assert set(got.B) == set(want.B)
    assert all(abs(complex(got.B[k]) - complex(want.B[k])) <= 1e-12 for k in want.B)
    code, out, err = run(capsys, "fit", SCEN / "pauli.json")
    # [s1, s2] = 2i s3 leaves the span of (s1, s2)
    assert code == 1 and json.loads(out)["kind"] == "algebra" and "feasible false" in err


def test_project(capsys, tmp_path):
    import numpy as np

    X = ff.load_matrices(SCEN / "sl2_rep.json") + 1e-3 * np.arange(12).reshape(3, 2, 2)
    ff.save_matrices(X, tmp_path / "noisy.json")
    code, _, err = run(capsys, "project", SCEN / "sl2_alg.json", tmp_path / "noisy.json", "--out", tmp_path / "p.json")
    assert code == 0
    res = float(next(l for l in err.splitlines() if l.startswith("max_residual")).split()[1])
    assert res <= 1e-10
    code, _, err = run(capsys, "project", SCEN / "weyl_alg.json", SCEN / "pauli.json", "--max-iter", 5)
    assert code == 1


def test_quantize_and_round_trip(capsys, tmp_path):
    t = tmp_path / "t.json"
    assert run(capsys, "quantize", SCEN / "lotka_system.json", "--out", t)[0] == 0
    code, out, _ = run(capsys, "round-trip", t, SCEN / "lotka_system.json", "--trials", 20)
    assert code == 0 and "coefficients_exact true" in out
    code, out, _ = run(capsys, "quantize", SCEN / "lotka_system.json", "--n", 3)
    assert code == 0 and len(json.loads(out)["constants"]["c"]) == 3


def test_round_trip_mismatch(capsys, tmp_path):
    t = tmp_path / "t.json"
    run(capsys, "quantize", SCEN / "lotka_system.json", "--out", t)
    raw = json.loads(t.read_text())
    raw["symbols"][0][0]["coeff"][0] += 1e-3
    t.write_text(json.dumps(raw))
    code, out, _ = run(capsys, "round-trip", t, SCEN / "lotka_system.json")
    assert code == 1 and "coefficients_exact false" in out


def small_search(tmp_path, **kw):
    raw = json.loads((SCEN / "search.json").read_text())
    raw.update(random_count=3, starts=2, grid=["so3", "broken_jacobi"], horizon=0.1, **kw)
    path = tmp_path / "search.json"
    path.write_text(json.dumps(raw))
    return path


def test_explore_deterministic(capsys, tmp_path):
    spec = small_search(tmp_path)
    for name in ("a", "b"):
        assert run(capsys, "explore", spec, "--out", tmp_path / f"{name}.jsonl", "--seed", 5)[0] == 0
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()
    head, entries = ff.read_catalog(tmp_path / "a.jsonl")
    assert head["seed"] == 5 and head["entries"] == len(entries) == 5


def test_explore_env_seed(capsys, tmp_path, monkeypatch):
    spec = small_search(tmp_path)
    monkeypatch.setenv("REPDYN_SEED", "5")
    run(capsys, "explore", spec, "--out", tmp_path / "env.jsonl")
    run(capsys, "explore", spec, "--out", tmp_path / "flag.jsonl", "--seed", 5)
    run(capsys, "explore", spec, "--out", tmp_path / "other.jsonl", "--seed", 6)
    assert (tmp_path / "env.jsonl").read_bytes() == (tmp_path / "flag.jsonl").read_bytes()
    assert (tmp_path / "env.jsonl").read_bytes() != (tmp_path / "other.jsonl").read_bytes()
    monkeypatch.setenv("REPDYN_SEED", "five")
    assert run(capsys, "explore", spec, "--out", tmp_path / "x.jsonl")[0] == 2


def test_explore_truncated(capsys, tmp_path):
    code, _, err = run(capsys, "explore", small_search(tmp_path, max_samples=2), "--out", tmp_path / "c.jsonl")
    assert code == 1 and "truncated true" in err


def test_help_lists_subcommands(capsys):
    code, out, _ = run(capsys, "--help")
    assert code == 0
    for cmd in ("weyl", "pbw", "check-rep", "fit", "project", "simulate", "quantize", "round-trip", "explore"):
        assert cmd in out
