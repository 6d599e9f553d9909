import json

import pytest
from click.testing import CliRunner

from invasionrisk import __version__
from invasionrisk.cli.main import cli
from invasionrisk.core.fixture import generate_fixture
from invasionrisk.utils.exceptions import EXIT_CONFIG, EXIT_DATA


@pytest.fixture
def runner():
    return CliRunner()


def test_version(runner):
    result = runner.invoke(cli, ["--version"])
    assert result.exit_code == 0
    assert __version__ in result.output


def test_fixture_command_writes_inputs(runner, tmp_path):
    result = runner.invoke(cli, ["--no-color", "fixture", str(tmp_path / "scenario")])
    assert result.exit_code == 0, result.output
    for name in ("ports.csv", "climate.csv", "climate_warming.csv", "ais.csv", "config.json"):
        assert (tmp_path / "scenario" / name).is_file()


def test_run_command(runner, scenario_files, tmp_path):
    out = tmp_path / "cli-run"
    result = runner.invoke(
        cli, ["--no-color", "--config", str(scenario_files.config), "--out", str(out), "run"]
    )
    assert result.exit_code == 0, result.output
    assert "Highest risk" in result.output
    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["status"] == "ok"
    assert (out / "reports" / "report.txt").is_file()


def test_cluster_command_prints_labels(runner, scenario_files, tmp_path):
    out = tmp_path / "cli-cluster"
    result = runner.invoke(
        cli, ["--no-color", "-c", str(scenario_files.config), "-o", str(out), "cluster"]
    )
    assert result.exit_code == 0, result.output
    assert "2 found" in result.output
    assert (out / "artifacts" / "clusters.csv").is_file()


def test_missing_input_exits_with_config_code(runner, tmp_path):
    files = generate_fixture(tmp_path / "broken", seed=0)
    files.climate.unlink()
    result = runner.invoke(cli, ["--no-color", "--config", str(files.config), "run"])
    assert result.exit_code == EXIT_CONFIG
    assert "climate" in result.output


def test_report_without_artifacts_exits_with_data_code(runner, tmp_path):
    result = runner.invoke(cli, ["--no-color", "--out", str(tmp_path / "nothing"), "report"])
    assert result.exit_code == EXIT_DATA
    assert "report" in result.output


def test_unknown_stage_is_usage_error(runner):
    result = runner.invoke(cli, ["--from-stage", "bogus", "run"])
    assert result.exit_code == 2
    assert "bogus" in result.output


def test_from_stage_is_rejected_outside_run(runner, tmp_path):
    result = runner.invoke(
        cli, ["--no-color", "--out", str(tmp_path / "nothing"), "--from-stage", "risk", "report"]
    )
    assert result.exit_code == 2
    assert "--from-stage" in result.output
    assert not (tmp_path / "nothing").exists()
