import json
import os
import pathlib
import subprocess

import jsonschema
import pytest

ROOT = pathlib.Path(__file__).resolve().parents[2]
CONFIGS = ROOT / "configs"
HSP = os.environ.get("HSP_BIN")

RUN_CONFIGS = [
    "horseshoe_theorem_a.json",
    "horseshoe_corrupted_epsilon.json",
    "horseshoe_constant_minus1.json",
    "horseshoe_constant_half.json",
    "cat_theorem_a.json",
    "rotation_control.json",
]


@pytest.mark.parametrize("name", RUN_CONFIGS)
def test_configs_match_schema(name):
    schema = json.loads((CONFIGS / "schema.json").read_text())
    jsonschema.validate(json.loads((CONFIGS / name).read_text()), schema)


def run(*args):
    return subprocess.run([HSP, *args], capture_output=True, text=True)


pytestmark = pytest.mark.skipif(HSP is None, reason="HSP_BIN not set")


def test_pressure_subcommand(tmp_path):
    r = run("pressure", "--config", str(CONFIGS / "pressure_two_three.json"), "--csv", str(tmp_path / "b.csv"))
    assert r.returncode == 0
    assert json.loads(r.stdout)["bowen_root"] == pytest.approx(0.2811995743, abs=1e-9)
    lines = (tmp_path / "b.csv").read_text().splitlines()
    assert lines[0] == "N,log_C_exact,log_C_table,diff"
    assert len(lines) == 20


def test_validate_exit_code():
    r = run("validate", "--config", str(CONFIGS / "validate_budget.json"))
    assert r.returncode == 2
    assert "FAIL [required] rectangle_count_budget" in r.stdout


def test_bad_config_exit_code(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"schema_version": 1, "schedule": [{"rho": 0.2}], "colour": "red"}))
    assert run("theorem-a", "--config", str(bad), "--out", str(tmp_path)).returncode == 4


def test_stage_failure_exit_code(tmp_path):
    r = run("theorem-a", "--config", str(CONFIGS / "rotation_control.json"), "--out", str(tmp_path))
    assert r.returncode == 3
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["stages"][0]["status"] == "stage_failure"


def test_certificate_negative_exit_code(tmp_path):
    r = run("theorem-b", "--config", str(CONFIGS / "certificate_negative.json"), "--out", str(tmp_path))
    assert r.returncode == 2
    assert "certificate negative" in r.stderr


def test_lyapunov_subcommand():
    r = run("lyapunov", "--system", "horseshoe", "--point", "0", "0", "--horizon", "20")
    assert r.returncode == 0
    assert json.loads(r.stdout)["exponents"][1] == pytest.approx(1.0986122886681098, abs=1e-12)
