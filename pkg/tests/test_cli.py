from __future__ import annotations

import csv
import io
import json
import math
import subprocess
import sys

import pytest

from dunklkit.cli import main, parse_range, parse_vector
from dunklkit.kernel import EvalReport


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_eval_rank_one(capsys):
    code, out, _ = run(["eval", "--n", "1", "--k", "1", "--x", "1,0", "--lambda", "1,-1", "--method", "reduce"], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["schema"] == 1
    assert rep["value"] == pytest.approx(1.5430806348, abs=1e-10)


def test_eval_origin(capsys):
    code, out, _ = run(["eval", "--n", "2", "--k", "0.75", "--x", "0,0,0", "--lambda", "2,0,-2"], capsys)
    assert code == 0 and json.loads(out)["value"] == pytest.approx(1.0, abs=1e-10)


def test_eval_rejects_degenerate(capsys):
    code, _, err = run(["eval", "--n", "1", "--k", "1", "--x", "1,0", "--lambda", "1,1"], capsys)
    assert code == 2 and "lambda not strictly dominant" in err


@pytest.mark.parametrize("argv", [
    ["--x", "1,0,0", "--lambda", "1,-1"],
    ["--n", "2", "--x", "1,0", "--lambda", "1,-1"],
    ["--x", "1,zz", "--lambda", "1,-1"],
    ["--x", "1,0", "--lambda", "1,-1", "--nodes", "4"],
])
def test_eval_invalid_input(argv, capsys):
    code, _, err = run(["eval", "--k", "1"] + argv, capsys)
    assert code == 2 and err.startswith("error:")


def test_eval_negative_multiplicity(capsys):
    code, _, _ = run(["eval", "--k", "-1", "--x", "1,0", "--lambda", "1,-1"], capsys)
    assert code == 2


def test_eval_strict_flagged(capsys):
    argv = ["eval", "--k", "0.5", "--x", "3,-2,0.5", "--lambda", "2,0,-2", "--nodes", "8,8", "--tolerance", "1e-14"]
    assert run(argv, capsys)[0] == 0
    assert run(argv + ["--strict"], capsys)[0] == 3


@pytest.mark.parametrize("method", ["reduce", "series", "xu", "a1", "compact", "symmetrized"])
def test_eval_methods_agree(method, capsys):
    code, out, _ = run(["eval", "--k", "0.5", "--x", "0,0.5", "--lambda", "1,-1", "--method", method], capsys)
    assert code == 0
    rep = json.loads(out)
    if method == "symmetrized":
        # Weyl average of E(X, lam) and E(swapped X, lam)
        assert rep["value"] == pytest.approx(1.0634833707413236, rel=1e-10)
    else:
        assert rep["value"] == pytest.approx(0.8055890653504264, abs=1e-10)


def test_eval_xu_with_explicit_index(capsys):
    code, out, _ = run(["eval", "--k", "1", "--x", "0,0,-1", "--lambda", "1,0,-1", "--method", "xu", "--j", "3"], capsys)
    assert code == 0
    code2, out2, _ = run(["eval", "--k", "1", "--x", "0,0,-1", "--lambda", "1,0,-1"], capsys)
    assert json.loads(out)["value"] == pytest.approx(json.loads(out2)["value"], abs=1e-10)
    code, _, _ = run(["eval", "--k", "1", "--x", "1,0,-1", "--lambda", "1,0,-1", "--method", "xu"], capsys)
    assert code == 2


def test_eval_csv_and_round_trip(tmp_path, capsys):
    target = tmp_path / "rep.json"
    code, _, _ = run(["eval", "--k", "1/2", "--x", "0.2,-0.1", "--lambda", "1,-1", "--out", str(target)], capsys)
    assert code == 0
    rep = EvalReport.from_json(target.read_text())
    assert EvalReport.from_json(rep.to_json()) == rep
    code, out, _ = run(["eval", "--k", "0.5", "--x", "0.2,-0.1", "--lambda", "1,-1", "--format", "csv"], capsys)
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0][:3] == ["value", "method", "error_estimate"]
    assert float(rows[1][0]) == pytest.approx(rep.value, abs=1e-15)
    assert "\r" not in out


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"nodes_per_level": [12], "tolerance": 1e-6}))
    code, out, _ = run(["eval", "--k", "1", "--x", "1,0", "--lambda", "1,-1", "--config", str(cfg)], capsys)
    assert code == 0 and json.loads(out)["nodes_per_level"] == [12]
    cfg.write_text(json.dumps({"bogus": 1}))
    assert run(["eval", "--k", "1", "--x", "1,0", "--lambda", "1,-1", "--config", str(cfg)], capsys)[0] == 2


# -- table ------------------------------------------------------------------

def _rows(text):
    return list(csv.reader(io.StringIO(text)))


def test_table_k_sweep_origin(capsys):
    code, out, _ = run(["table", "--sweep", "k", "--range", "0.5:2.5:0.5", "--lambda", "1,0,-1"], capsys)
    rows = _rows(out)
    assert code == 0
    assert rows[0] == ["param", "value", "error_estimate", "evals", "elapsed_ms"]
    assert [float(r[0]) for r in rows[1:]] == [0.5, 1.0, 1.5, 2.0, 2.5]
    assert all(abs(float(r[1]) - 1) <= 1e-10 for r in rows[1:])


def test_table_x_sweep_xu(capsys):
    code, out, _ = run(["table", "--sweep", "x", "--range", "-1:1:0.5", "--lambda", "1,0,-1",
                        "--k", "1", "--method", "xu", "--j", "3"], capsys)
    rows = _rows(out)
    assert code == 0
    zero = [r for r in rows[1:] if float(r[0]) == 0.0][0]
    assert float(zero[1]) == pytest.approx(1.0, abs=1e-12)


def test_table_compare_a1(capsys):
    code, out, _ = run(["table", "--sweep", "x", "--range", "-1:1:0.25", "--lambda", "1.5,-0.5",
                        "--k", "0.7", "--compare", "a1"], capsys)
    rows = _rows(out)
    assert code == 0 and rows[0][-1] == "delta"
    assert all(float(r[-1]) <= 1e-8 for r in rows[1:])


@pytest.mark.parametrize("rng", ["1:0:0.5", "0:1:0", "0:1", "a:b:c"])
def test_table_malformed_range(rng, capsys):
    code, _, _ = run(["table", "--sweep", "x", "--range", rng, "--lambda", "1,-1", "--k", "1"], capsys)
    assert code == 2


def test_table_deterministic_across_threads(capsys):
    base = ["table", "--sweep", "k", "--range", "0.5:1.5:0.5", "--x", "0.3,-0.2,0.1",
            "--lambda", "2,0.5,-1", "--no-timing"]
    outs = set()
    for t in ("1", "2", "8"):
        code, out, _ = run(base + ["--threads", t], capsys)
        assert code == 0
        outs.add(out)
    assert len(outs) == 1


def test_threads_from_environment(monkeypatch, capsys):
    monkeypatch.setenv("DUNKLKIT_THREADS", "2")
    code, out, _ = run(["eval", "--k", "1", "--x", "0.1,0,-0.1", "--lambda", "1,0,-1"], capsys)
    assert code == 0


def test_parse_helpers():
    assert parse_vector("1, -2.5,1/2", "v") == [1.0, -2.5, 0.5]
    assert parse_range("0:1:0.25") == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert parse_range("3,1") == [3.0, 1.0]


# -- validate ---------------------------------------------------------------

def test_validate_identities(capsys):
    code, out, _ = run(["validate", "--suite", "identities", "--n-max", "2"], capsys)
    assert code == 0
    assert "FAIL" not in out and "checks passed" in out


def test_validate_oracles_reports_sign(capsys):
    code, out, _ = run(["validate", "--suite", "oracles", "--n-max", "2", "--seed", "42"], capsys)
    assert code == 0
    assert "xu_sign_resolution" in out


def test_validate_json(capsys):
    code, out, _ = run(["validate", "--suite", "eigen", "--n-max", "1", "--format", "json"], capsys)
    data = json.loads(out)
    assert code == 0 and data["passed"] and all(c["residual"] <= 1e-4 for c in data["checks"])


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "dunklkit", "eval", "--k", "1", "--x", "1,0", "--lambda", "1,-1"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["value"] == pytest.approx(math.cosh(1.0), abs=1e-10)


def test_bad_subcommand(capsys):
    assert run(["frobnicate"], capsys)[0] == 2
