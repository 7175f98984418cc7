import json
import math
from fractions import Fraction

import pytest

from dientropy.cli import main
from dientropy.core import Behavior, Scenario


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def error_of(err):
    lines = err.strip().splitlines()
    return json.loads(lines[-1])


def test_min_entropy_anchor(capsys):
    code, out, _ = run(capsys, "min-entropy", "--witness", "I3", "--value", "4", "--dmax", "3")
    assert code == 0
    data = json.loads(out)
    assert sorted(Fraction(p) for p in data["distribution"]) == [Fraction(1, 6), Fraction(1, 3), Fraction(1, 2)]
    assert data["H_min_bits"] == pytest.approx(1.4591479170272448, abs=1e-9)


def test_unreachable_value_exits_3(capsys):
    code, _, err = run(capsys, "min-entropy", "--witness", "I3", "--value", "6", "--dmax", "3")
    assert code == 3
    assert error_of(err)["exit"] == 3


def test_unknown_command_exits_2(capsys):
    code, _, err = run(capsys, "frobnicate")
    assert code == 2
    assert error_of(err)["error"] == "usage"


def test_missing_file_exits_5(capsys, tmp_path):
    code, _, err = run(capsys, "validate", "--behavior", str(tmp_path / "nope.json"))
    assert code == 5
    assert set(error_of(err)) == {"error", "exit", "message"}


def test_malformed_behavior_exits_2(capsys, tmp_path):
    path = tmp_path / "b.json"
    path.write_text("{not json")
    code, _, _ = run(capsys, "min-entropy", "--behavior", str(path), "--d", "2")
    assert code == 2


def test_size_cap_exits_4(capsys):
    code, _, err = run(capsys, "strategies", "--n", "4", "--l", "3", "--k", "2", "--d", "4", "--cap", "100")
    assert code == 4
    assert error_of(err)["exit"] == 4


def test_bad_jobs_env(capsys, monkeypatch):
    monkeypatch.setenv("DIENTROPY_JOBS", "many")
    code, _, _ = run(capsys, "example-zero-entropy", "--d", "3")
    assert code == 2


def test_dry_run_prints_plan(capsys):
    code, out, _ = run(capsys, "strategies", "--n", "2", "--l", "1", "--k", "2", "--d", "2", "--dry-run")
    assert code == 0
    plan = json.loads(out)
    assert plan["command"] == "strategies" and plan["raw_count"] == 16


def test_curve_has_41_rows(capsys, tmp_path):
    path = tmp_path / "curve.csv"
    code, _, _ = run(capsys, "curve", "--witness", "I3", "--dmax", "3", "--jobs", "1", "-o", str(path))
    assert code == 0
    lines = path.read_text().splitlines()
    assert lines[0] == "value,H_min_bits,H_closed_form_bits,d_active"
    assert len(lines) == 42
    assert float(lines[-1].split(",")[1]) == pytest.approx(math.log2(3), abs=1e-9)


def test_facets_text(capsys):
    code, out, _ = run(capsys, "facets", "--dag", "fig1b")
    assert code == 0
    assert "I(X:Y,B) - H(M) <= 0" in out.splitlines()


def test_facets_json(capsys):
    code, out, _ = run(capsys, "facets", "--dag", "fig1b", "--format", "json")
    assert code == 0
    assert len(json.loads(out)["nontrivial_inequalities"]) == 1


def test_strategies_jsonl(capsys, tmp_path):
    path = tmp_path / "s.jsonl"
    code, _, _ = run(capsys, "strategies", "--n", "2", "--l", "1", "--k", "2", "--d", "2", "-o", str(path))
    assert code == 0
    assert len(path.read_text().splitlines()) == 16


def _perfect_behavior(tmp_path):
    s = Scenario(2, 1, 2)
    b = Behavior(s, (Fraction(1), Fraction(0), Fraction(0), Fraction(1)))
    path = tmp_path / "b.json"
    path.write_text(json.dumps(b.to_json()))
    return path


def test_behavior_route_and_entropic_bound(capsys, tmp_path):
    path = _perfect_behavior(tmp_path)
    code, out, _ = run(capsys, "min-entropy", "--behavior", str(path), "--d", "2")
    assert code == 0
    assert json.loads(out)["H_min_bits"] == pytest.approx(1.0, abs=1e-12)
    code, out, _ = run(capsys, "entropic-bound", "--behavior", str(path), "--joint", "holevo")
    assert code == 0
    assert json.loads(out)["lhs_bits"] == pytest.approx(1.0, abs=1e-12)


def test_validate_ok(capsys, tmp_path):
    code, _, _ = run(capsys, "validate", "--behavior", str(_perfect_behavior(tmp_path)))
    assert code == 0


def test_validate_rejects_bad_rows(capsys, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"n": 2, "l": 1, "k": 2, "p": [[["1", "1"]], [["1/2", "1/2"]]]}))
    code, _, _ = run(capsys, "validate", "--behavior", str(path))
    assert code == 2


def test_quantum_curve_small(capsys, tmp_path):
    path = tmp_path / "q.csv"
    code, _, _ = run(
        capsys, "quantum-curve", "--witness", "I3", "--d", "2", "--grid", "0:1:3",
        "--restarts", "2", "--maxfev", "400", "--seed", "1", "--jobs", "1", "-o", str(path),
    )
    assert code == 0
    lines = path.read_text().splitlines()
    assert lines[0] == "s_bits,witness_value,restart_best_index,seed"
    assert len(lines) == 4
