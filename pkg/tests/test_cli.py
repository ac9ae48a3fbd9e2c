import csv
import io
import json
import math

import pytest

from curv4 import cli
from curv4.functionals import BoundEntry, BoundReport, Normalization

RIPPLE = """
[chart]
domain = [[0, 1], [0, 1], [0, 1], [0, 1]]
periodic = [true, true, true, true]
[metric]
g11 = "1"
g22 = "(1 + 0.1*sin(2*pi*x1))^2"
g33 = "exp(0.1*cos(2*pi*x1))"
g44 = "1"
g23 = "0.1*sin(2*pi*x1)"
"""


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_analyze_s4_json(capsys):
    code, out, _ = run(capsys, "analyze", "--metric", "s4", "--grid", "32", "--format", "json")
    assert code == 0
    rep = json.loads(out)
    assert rep["schema"] == "curv4/1"
    assert rep["chi_snapped"] == 2 and rep["tau_snapped"] == 0
    assert rep["k1perp"] == pytest.approx(1.0) and rep["k3perp"] == pytest.approx(1.0)
    assert rep["betti"] == {"b1": 0, "b2": 0, "b2_plus": 0, "b2_minus": 0}
    for row in rep["samples"]:
        assert row["k1perp_brute"] == pytest.approx(1.0, abs=1e-9)
    assert "timings" not in rep


def test_analyze_flat_all_zero(capsys):
    code, out, _ = run(capsys, "analyze", "--metric", "flat-t4", "--grid", "8", "--format", "json")
    assert code == 0
    rep = json.loads(out)
    assert rep["k1perp"] == 0.0 and rep["k3perp"] == 0.0
    f = rep["functionals"]
    assert f["weyl_func"] == f["e1perp"] == f["r_infinity"] == f["sup_abs_k"] == 0.0
    for row in rep["samples"]:
        assert row["s"] == 0.0 and row["sectional_max"] == 0.0


def test_analyze_is_deterministic(capsys):
    argv = ("analyze", "--metric", "cp2", "--grid", "16", "--format", "json", "--seed", "5")
    first = run(capsys, *argv)[1]
    second = run(capsys, *argv)[1]
    assert first == second


def test_analyze_json_round_trip(capsys):
    out = run(capsys, "analyze", "--metric", "s2xs2", "--format", "json")[1]
    rep = json.loads(out)
    assert json.loads(json.dumps(rep)) == rep
    assert cli.render(rep, "json") == out


def test_analyze_markdown(capsys):
    code, out, _ = run(capsys, "analyze", "--metric", "cp2", "--timings")
    assert code == 0
    assert out.startswith("# curv4 analyze")
    assert "| gauss_bonnet_chi |" in out and "timings (s):" in out


def test_analyze_params(capsys):
    code, out, _ = run(capsys, "analyze", "--metric", "s1xs3", "--param", "r1=0.5", "--format", "json")
    assert code == 0
    assert json.loads(out)["functionals"]["vol"] == pytest.approx(2 * math.pi**3)


def test_analyze_toml_file(capsys, tmp_path):
    path = tmp_path / "ripple.toml"
    path.write_text(RIPPLE)
    code, out, _ = run(capsys, "analyze", "--metric", str(path), "--grid", "128", "--format", "json", "--points", "1")
    assert code == 0
    rep = json.loads(out)
    assert rep["metric"]["name"] == "ripple"
    assert rep["chi_snapped"] == 0 and rep["topology"]["bg_ok"]


@pytest.mark.parametrize(
    "argv",
    [
        ("analyze", "--metric", "nosuch"),
        ("analyze", "--metric", "s4", "--param", "r"),
        ("analyze", "--metric", "s4", "--param", "q=1"),
        ("analyze", "--metric", "s4", "--samples", "10"),
        ("analyze", "--metric", "missing.toml"),
        ("verify", "--metric", "s4", "--suite", "nosuch"),
        ("verify", "--metric", "flat-t4", "--suite", "conformal", "--phi", "x1 +"),
        ("verify", "--metric", "flat-t4", "--suite", "conformal", "--phi", "log(x1-5)"),
        ("sweep", "--family", "s1xs3-collapse", "--t-min", "0", "--t-max", "1"),
        ("sweep", "--family", "s1xs3-collapse", "--t-min", "1", "--t-max", "0.5", "--steps", "3"),
        ("sweep", "--family", "nosuch", "--t-min", "1", "--t-max", "2"),
    ],
)
def test_input_errors_exit_2(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2
    assert out == "" and err.startswith("error:")


def test_bad_toml_exit_2(capsys, tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text(RIPPLE.replace('g11 = "1"', 'g11 = "1 +"'))
    code, _, err = run(capsys, "analyze", "--metric", str(path))
    assert code == 2 and "offset 3" in err


def test_non_convergence_exit_3(capsys, tmp_path):
    path = tmp_path / "ripple.toml"
    path.write_text(RIPPLE)
    code, out, err = run(capsys, "analyze", "--metric", str(path), "--grid", "16")
    assert code == 3 and out == ""
    assert "larger grid" in err


def test_verify_cp2(capsys):
    code, out, _ = run(capsys, "verify", "--metric", "cp2", "--suite", "volume,lemmas", "--format", "json")
    assert code == 0
    rep = json.loads(out)
    assert rep["pass"] and [b["suite"] for b in rep["bounds"]] == ["volume", "lemmas"]
    for b in rep["bounds"]:
        for e in b["entries"]:
            assert e["reference"]


@pytest.mark.parametrize("metric, value", [("s4", 16 * math.pi**2), ("s2xs2", 32 * math.pi**2)])
def test_verify_supnorm_equality(capsys, metric, value):
    code, out, _ = run(capsys, "verify", "--metric", metric, "--suite", "supnorm", "--format", "json")
    assert code == 0
    entry = next(e for e in json.loads(out)["bounds"][0]["entries"] if e["name"] == "rinf-euler")
    assert entry["equality"] and entry["lhs"] == pytest.approx(value)


def test_verify_markdown_and_conformal(capsys):
    code, out, _ = run(
        capsys, "verify", "--metric", "flat-t4", "--suite", "conformal", "--phi", "0.1*sin(2*pi*x1)", "--grid", "64"
    )
    assert code == 0
    assert "## conformal" in out and "overall: pass" in out
    # inequality text containing '|' must not break the table
    row = next(line for line in out.splitlines() if line.startswith("| weyl-invariance"))
    assert "\\|" in row


def test_verify_failure_exit_4(capsys, monkeypatch):
    def failing(chart, grid):
        entry = BoundEntry("always-false", "1 <= 0", 1.0, 0.0, "<=", 0.0)
        return BoundReport("lemmas", chart.descriptor(), Normalization("none", 1.0), [entry])

    monkeypatch.setitem(cli.SUITES, "lemmas", failing)
    code, out, err = run(capsys, "verify", "--metric", "s4", "--suite", "lemmas", "--format", "json")
    assert code == 4
    assert json.loads(out)["pass"] is False
    assert "bound failed: lemmas/always-false" in err


def test_sweep_csv(capsys):
    code, out, _ = run(capsys, "sweep", "--family", "s1xs3-collapse", "--t-min", "0.01", "--t-max", "1", "--steps", "20")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 20
    for row in rows:
        t = float(row["t"])
        assert float(row["vol"]) == pytest.approx(4 * math.pi**3 * t, rel=1e-12)
        assert float(row["sup_abs_k"]) == pytest.approx(1.0, abs=1e-9)
    vols = [float(r["vol"]) for r in rows]
    assert vols == sorted(vols)


def test_sweep_single_step_json(capsys):
    code, out, _ = run(capsys, "sweep", "--family", "flat-t4", "--t-min", "0.5", "--t-max", "2", "--steps", "1", "--format", "json")
    assert code == 0
    rows = json.loads(out)["rows"]
    assert len(rows) == 1 and rows[0]["t"] == 0.5 and rows[0]["vol"] == pytest.approx(0.5)
