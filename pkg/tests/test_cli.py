import json

import pytest

from symlift.cli import main
from symlift.scenarios import ConfigError, ScenarioConfig, config_from_mapping, list_scenarios, load_config, run


def test_list_scenarios_stable():
    names = [n for n, _ in list_scenarios()]
    assert names == [n for n, _ in list_scenarios()]
    assert "heisenberg" in names and "magnetic_r2" in names
    assert names == ["heisenberg", "cotangent_r1", "cotangent_r2", "cylinder_s1", "torus4_model", "magnetic_r2"]


def test_verify_is_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["verify", "heisenberg", "--seed", "42", "--report", str(a), "--quiet"]) == 0
    assert main(["verify", "heisenberg", "--seed", "42", "--report", str(b), "--quiet"]) == 0
    assert a.read_bytes() == b.read_bytes()
    report = json.loads(a.read_text())
    assert list(report) == ["scenario", "seed", "config", "checks", "overall", "runtime_ms"]
    assert report["overall"] == "pass" and report["runtime_ms"] is None
    names = [c["name"] for c in report["checks"]]
    for key in ("cocycle", "closedness", "symplectic", "obstruction", "equivalence_roundtrip"):
        assert key in names
    obstruction = next(c for c in report["checks"] if c["name"] == "obstruction")
    assert obstruction["note"] == "infeasible: class non-trivial"
    assert all(c["anchor"] for c in report["checks"])


def test_unattainable_tolerance_fails_with_records(tmp_path):
    out = tmp_path / "r.json"
    assert main(["verify", "heisenberg", "--tol", "1e-30", "--report", str(out), "--quiet"]) == 1
    report = json.loads(out.read_text())
    assert report["overall"] == "fail"
    assert all(isinstance(c["residual"], float) for c in report["checks"])


def test_unknown_scenario_exit_code(capsys):
    assert main(["verify", "nope", "--quiet"]) == 2
    assert "unknown scenario" in capsys.readouterr().err


def test_report_dir_env(tmp_path, monkeypatch):
    monkeypatch.setenv("SYMLIFT_REPORT_DIR", str(tmp_path))
    assert main(["verify", "cotangent_r1", "--quiet"]) == 0
    assert (tmp_path / "cotangent_r1_seed42.json").exists()


def test_config_file(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("scenario: cotangent_r1\nseed: 7\nsamples: {base: 12}\ntolerances: {flow_vs_translation: 1e-9}\n"
                   f"output: {tmp_path / 'out.json'}\n")
    c = load_config(cfg)
    assert c.seed == 7 and c.base_samples == 12 and c.tolerances["flow_vs_translation"] == 1e-9
    assert main(["verify", "cotangent_r1", "--config", str(cfg), "--quiet"]) == 0
    assert json.loads((tmp_path / "out.json").read_text())["seed"] == 7


@pytest.mark.parametrize("data", [
    {"scenario": "heisenberg", "seed": "x"},
    {"scenario": "heisenberg", "samples": 0},
    {"scenario": "heisenberg", "tolerances": {"cocycle": -1}},
    {"scenario": "heisenberg", "colour": "red"},
    {"seed": 1},
])
def test_malformed_config(data):
    with pytest.raises(ConfigError):
        config_from_mapping(data)


def test_malformed_config_exit_code(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("scenario: heisenberg\nsamples: -3\n")
    assert main(["verify", "heisenberg", "--config", str(cfg), "--quiet"]) == 2


def test_unknown_cochain_is_config_error():
    with pytest.raises(ConfigError):
        run(ScenarioConfig("heisenberg", cochain="bogus"))


def test_failing_check_is_recorded_not_raised():
    # a nonclosed cochain breaks the cocycle checks but the run completes
    r = run(ScenarioConfig("heisenberg", cochain="nonclosed_demo", group_samples=10, base_samples=10,
                           fiber_samples=10))
    assert r.overall == "fail"
    by_name = {c.name: c for c in r.checks}
    assert not by_name["closedness"].passed
    assert by_name["group_axioms"].passed


@pytest.mark.parametrize("name", ["cotangent_r1", "cotangent_r2", "cylinder_s1", "torus4_model", "magnetic_r2"])
def test_default_scenarios_pass(name):
    r = run(ScenarioConfig(name))
    assert r.overall == "pass", r.summary()
