import json
from pathlib import Path

import pytest

from main import EXIT_CONFIG, EXIT_OK, main


def test_list(capsys: pytest.CaptureFixture[str]) -> None:
    assert main(["list"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "strategy-reduced28" in out and "case3-ftc" in out


def test_unknown_scenario_is_a_config_error(tmp_path: Path) -> None:
    assert main(["run", "--scenario", "no-such-scenario", "--out", str(tmp_path)]) == EXIT_CONFIG


def test_bad_override_is_a_config_error(tmp_path: Path) -> None:
    assert main(["run", "--scenario", "hover-nominal", "--out", str(tmp_path), "--param", "nonsense"]) == EXIT_CONFIG


def test_run_scenario_file(tmp_path: Path) -> None:
    scenario = tmp_path / "short.json"
    scenario.write_text(json.dumps({"name": "short", "duration": 0.2}))
    code = main(["run", "--scenario", str(scenario), "--out", str(tmp_path / "out"), "--seed", "3", "--param", "sim.noise_rate=0"])
    assert code == EXIT_OK
    assert (tmp_path / "out" / "short.csv").exists()
    metrics = json.loads((tmp_path / "out" / "short_metrics.json").read_text())
    assert metrics["stable"] is True
