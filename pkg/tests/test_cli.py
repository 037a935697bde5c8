import json
import subprocess
import sys
from pathlib import Path

import pytest

from hardylab.cli import (EXIT_DIVERGENT, EXIT_FAIL, EXIT_INPUT, EXIT_PASS,
                          bundled_scenario_dir, load_scenario, main, run,
                          run_suite)

SCENARIOS = bundled_scenario_dir()


def read(path):
    return json.loads(Path(path).read_text())


def test_bundled_scenarios_load():
    files = sorted(SCENARIOS.glob("*.json"))
    assert len(files) >= 8
    for path in files:
        scenario, task, _ = load_scenario(path)
        assert task["command"]


def test_constant_command_pass(tmp_path):
    out = tmp_path / "report.json"
    code = run("constant", SCENARIOS / "hardy-p2.json", out,
               {"no_timestamp": True})
    assert code == EXIT_PASS
    doc = read(out)
    assert doc["results"]["constant"]["value"] == pytest.approx(2.0)
    assert doc["passed"] is True


def test_constant_command_divergent_exit(tmp_path):
    out = tmp_path / "report.json"
    code = run("constant", SCENARIOS / "hardy-divergent-p1.json", out,
               {"no_timestamp": True})
    assert code == EXIT_DIVERGENT
    doc = read(out)
    assert doc["results"]["constant"]["divergent"] is True
    assert doc["results"]["constant"]["value"] == "inf"


def test_input_error_exit(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{ not json")
    out = tmp_path / "report.json"
    assert run("constant", bad, out, {}) == EXIT_INPUT
    doc = read(out)
    assert doc["exit_code"] == EXIT_INPUT
    missing = tmp_path / "missing.json"
    assert run("constant", missing, out, {}) == EXIT_INPUT
    assert run("frobnicate", SCENARIOS / "hardy-p2.json", out, {}) == EXIT_INPUT


def test_expected_value_failure(tmp_path):
    doc = read(SCENARIOS / "hardy-p2.json")
    doc["task"]["params"]["expected_value"] = 3.0
    path = tmp_path / "wrong.json"
    path.write_text(json.dumps(doc))
    out = tmp_path / "report.json"
    assert run("constant", path, out, {"no_timestamp": True}) == EXIT_FAIL


def test_report_determinism(tmp_path):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    flags = {"no_timestamp": True, "seed": 99}
    run("sharpness", SCENARIOS / "hardy-sharpness.json", a, flags)
    run("sharpness", SCENARIOS / "hardy-sharpness.json", b, flags)
    assert a.read_bytes() == b.read_bytes()


def test_sharpness_csv_emission(tmp_path):
    out = tmp_path / "report.json"
    csv_path = tmp_path / "sweep.csv"
    code = run("sharpness", SCENARIOS / "hardy-sharpness.json", out,
               {"no_timestamp": True, "emit_csv": str(csv_path)})
    assert code == EXIT_PASS
    lines = csv_path.read_text().strip().splitlines()
    assert lines[0] == "epsilon,ratio,target,margin"
    assert len(lines) == 6  # header + default five epsilon points
    eps, ratio, target, margin = lines[-1].split(",")
    assert float(target) == pytest.approx(2.0)
    assert float(ratio) >= 0.98 * 2.0


def test_eval_command(tmp_path):
    doc = read(SCENARIOS / "hardy-p2.json")
    doc["task"] = {
        "command": "eval",
        "params": {
            "inputs": [{"profile": "r^(-0.25)"}],
            "points": [[2.0], [8.0]],
        },
    }
    path = tmp_path / "eval.json"
    path.write_text(json.dumps(doc))
    out = tmp_path / "report.json"
    assert run("eval", path, out, {"no_timestamp": True}) == EXIT_PASS
    rep = read(out)
    got = rep["results"]["evaluations"][0]["result"]["value"]
    assert got == pytest.approx(4.0 / 3.0 * 2.0 ** -0.25, rel=1e-10)


def test_norms_command(tmp_path):
    doc = read(SCENARIOS / "morrey-extremal-m2.json")
    doc["task"] = {
        "command": "norms",
        "params": {
            "allow_divergent": True,
            "inputs": [
                {"profile": "r^(-0.5125)", "inner_cutoff": 1.0},
                {"profile": "r^(-0.125)"},
            ],
        },
    }
    path = tmp_path / "norms.json"
    path.write_text(json.dumps(doc))
    out = tmp_path / "report.json"
    assert run("norms", path, out, {"no_timestamp": True}) == EXIT_PASS
    rep = read(out)
    entries = rep["results"]["norms"]
    assert entries[0]["lebesgue"]["value"] > 0
    # the pure Morrey extremal: no Lebesgue norm, finite central Morrey norm
    assert entries[1]["lebesgue"]["status"] == "divergent"
    assert entries[1]["central_morrey"]["value"] > 0


def test_check_conditions_command(tmp_path):
    out = tmp_path / "report.json"
    code = run("check-conditions", SCENARIOS / "power-weight-conditions.json",
               out, {"no_timestamp": True})
    assert code == EXIT_PASS
    rep = read(out)
    names = {c["name"] for c in rep["checks"]}
    assert "homogeneous-weight-vector" in names
    assert "morrey-balance-sufficiency" in names


def test_suite_over_bundled_dir(tmp_path):
    out = tmp_path / "suite.json"
    code = run_suite(SCENARIOS, out, {"no_timestamp": True})
    assert code == EXIT_PASS
    rep = read(out)
    assert rep["passed"] is True
    assert len(rep["scenarios"]) >= 8


def test_main_entry_point(tmp_path, capsys):
    code = main(["constant", str(SCENARIOS / "hardy-p2.json"), "--no-timestamp"])
    assert code == EXIT_PASS
    stdout = capsys.readouterr().out
    doc = json.loads(stdout)
    assert doc["command"] == "constant"


def test_console_script_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "hardylab.cli", "constant",
         str(SCENARIOS / "hardy-p2.json"), "--no-timestamp"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["passed"] is True
