import csv
import io
import json
import math
import subprocess
import sys

import pytest

from discrete_rellich.cli import PRECISION_ENV, SCHEMA_VERSION, canonical_json, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    return code, json.loads(out), err


def test_weights_order_two(capsys):
    code, rep, _ = run_json(capsys, "weights", "--order", "2", "--from", "2", "--to", "10")
    assert code == 0
    assert rep["schema"] == SCHEMA_VERSION
    assert len(rep["results"]) == 9
    assert all(r["ratio"] > 1 for r in rep["results"])
    assert rep["checks"][0]["passed"]


def test_weights_order_one_single_row(capsys):
    code, rep, _ = run_json(capsys, "weights", "--order", "1", "--from", "1", "--to", "1")
    assert code == 0
    (row,) = rep["results"]
    assert sorted(row) == ["leading", "n", "ratio", "rho"]
    assert row["n"] == 1 and row["leading"] == 0.25
    assert rep["results"][0]["rho"] == pytest.approx(2 - math.sqrt(2), rel=1e-15)


def test_weights_series_column(capsys):
    code, rep, _ = run_json(capsys, "weights", "--order", "2", "--from", "50", "--to", "52", "--series-terms", "6")
    assert code == 0
    for r in rep["results"]:
        assert r["series"] == pytest.approx(r["rho"], rel=1e-12)
        assert r["series"] <= r["rho"]
    # with two terms the positive remainder is well above rounding
    _, rep, _ = run_json(capsys, "weights", "--order", "2", "--from", "50", "--to", "52", "--series-terms", "2")
    assert all(r["series"] < r["rho"] for r in rep["results"])


@pytest.mark.parametrize(
    "argv",
    [
        ["weights", "--order", "2", "--from", "1", "--to", "5"],
        ["weights", "--order", "2", "--from", "5", "--to", "4"],
        ["factorize", "--n-max", "1"],
        ["verify", "identity", "--order", "3"],
        ["verify", "identity", "--order", "1", "--support", "1"],
        ["optimality", "hardy-critical", "--N-list", "16,4"],
        ["optimality", "hardy-critical", "--N-list", "a,b"],
        ["spectral", "hardy", "--sizes", "64,32"],
        ["spectral", "conjecture", "--order", "2", "--sizes", "16"],
        ["spectral", "hardy", "--sizes", "30000"],
        ["combinatorics", "series", "--order", "3", "--l-max", "2"],
        ["nonsense"],
        [],
    ],
)
def test_usage_errors_exit_one(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 1
    assert err


def test_help_exits_zero(capsys):
    code, out, _ = run(capsys, "--help")
    assert code == 0 and "weights" in out


def test_factorize(capsys):
    code, rep, _ = run_json(capsys, "factorize", "--n-max", "1000")
    assert code == 0
    assert rep["precision"] == "ext"
    assert rep["summary"]["zeta_1"] == pytest.approx(8 * math.sqrt(2) - 3 * math.sqrt(3), rel=1e-15)
    for name in ("set1", "set2", "set3"):
        assert rep["summary"][f"max_{name}_residual"] <= 1e-11
    assert rep["summary"]["f64_ext_divergence"] <= 1e-12
    assert len(rep["results"]) == 1000
    assert all(r["lower_margin"] > 0 and r["upper_margin"] > 0 for r in rep["results"])


def test_factorize_bound_violation_exits_two(capsys, monkeypatch):
    import discrete_rellich.factorization as fz

    def fail(n_max, precision="ext"):
        raise fz.SandwichViolation(17, 9.0, 1.0, 2.0)

    monkeypatch.setattr(fz, "rellich_coeffs", fail)
    code, rep, err = run_json(capsys, "factorize", "--n-max", "100")
    assert code == 2
    assert rep["summary"]["offending_index"] == 17
    assert "sandwich" in err


@pytest.mark.parametrize("order,tol", [("1", "1e-12"), ("2", "1e-10")])
def test_verify_identity(capsys, order, tol):
    argv = ["verify", "identity", "--order", order, "--trials", "1000", "--support", "512", "--tol", tol, "--seed", "4"]
    code, first, _ = run(capsys, *argv)
    assert code == 0
    code, second, _ = run(capsys, *argv)
    assert canonical_json(first) == canonical_json(second)
    rep = json.loads(first)
    assert rep["seed"] == 4 and rep["checks"]


def test_verify_failure_exits_two(capsys):
    code, rep, err = run_json(capsys, "verify", "identity", "--order", "2", "--trials", "5", "--support", "64",
                              "--tol", "1e-30")
    assert code == 2
    assert not rep["checks"][0]["passed"]
    assert "trial" in rep["checks"][0]["detail"]


def test_optimality_hardy_critical(capsys):
    code, rep, _ = run_json(capsys, "optimality", "hardy-critical", "--N-list", "4,16,64,256")
    assert code == 0
    assert len(rep["results"]) == 4
    for r in rep["results"]:
        assert r["remainder_norm2"] <= 4 / math.log(r["N"])


def test_optimality_distance(capsys):
    code, rep, _ = run_json(capsys, "optimality", "distance", "--N-list", "16,256")
    assert code == 0
    values = [r["remainder_norm2"] for r in rep["results"]]
    target = 8 * math.sqrt(2) - 3 * math.sqrt(3)
    assert abs(values[1] - target) < abs(values[0] - target)


def test_combinatorics(capsys):
    code, rep, _ = run_json(capsys, "combinatorics", "identity", "--s-max", "12", "--k-max", "12")
    assert code == 0 and rep["summary"]["all_equal"] is True
    code, rep, _ = run_json(capsys, "combinatorics", "series", "--order", "2", "--l-max", "4")
    assert code == 0
    assert [r["coefficient"] for r in rep["results"]] == ["9/16", "105/128", "6237/4096"]


def test_spectral_best_constant(capsys):
    code, rep, _ = run_json(capsys, "spectral", "best-constant", "--sizes", "2,16,128")
    assert code == 0
    vals = [r["lambda_min"] for r in rep["results"]]
    assert vals == sorted(vals, reverse=True)
    assert vals[0] == pytest.approx((101 - math.sqrt(9305)) / 2, abs=1e-10)


def test_spectral_conjecture_label(capsys):
    code, rep, _ = run_json(capsys, "spectral", "conjecture", "--order", "3", "--sizes", "32,64")
    assert code == 0
    assert rep["summary"]["label"] == "EVIDENCE"


def test_csv_projection(capsys):
    code, out, _ = run(capsys, "weights", "--order", "2", "--from", "2", "--to", "4", "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [r["n"] for r in rows] == ["2", "3", "4"]
    # 17 significant digits reparse to the same double
    code, rep, _ = run_json(capsys, "weights", "--order", "2", "--from", "2", "--to", "4")
    assert [float(r["rho"]) for r in rows] == [r["rho"] for r in rep["results"]]


def test_output_file(capsys, tmp_path):
    path = tmp_path / "report.json"
    code, out, _ = run(capsys, "weights", "--order", "1", "--from", "1", "--to", "3", "--output", str(path))
    assert code == 0 and out == ""
    assert json.loads(path.read_text())["command"] == "weights"


def test_precision_environment(capsys, monkeypatch):
    monkeypatch.setenv(PRECISION_ENV, "f64")
    code, rep, _ = run_json(capsys, "weights", "--order", "1", "--from", "1", "--to", "2")
    assert code == 0 and rep["precision"] == "f64"
    code, rep, _ = run_json(capsys, "weights", "--order", "1", "--from", "1", "--to", "2", "--precision", "ext")
    assert rep["precision"] == "ext"
    monkeypatch.setenv(PRECISION_ENV, "quad")
    code, _, _ = run(capsys, "weights", "--order", "1", "--from", "1", "--to", "2")
    assert code == 1


def test_canonical_json_drops_wall_time():
    a = json.dumps({"wall_time_ms": 5, "x": 1.0})
    b = json.dumps({"x": 1.0, "wall_time_ms": 9})
    assert canonical_json(a) == canonical_json(b)


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "discrete_rellich", "weights", "--order", "1", "--from", "1", "--to", "1"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["results"][0]["n"] == 1
