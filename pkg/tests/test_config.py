import json
from pathlib import Path

import pytest

from invasionrisk.core.config import build_config, load_config, validate_inputs
from invasionrisk.utils.exceptions import ConfigurationError


def test_defaults():
    config = build_config()
    assert config.risk.gamma == 0.6
    assert config.risk.hops == 3
    assert config.kernel.beta == 0.5
    assert config.clustering.min_cluster_size == 5
    assert config.forecast.delta == 1
    assert config.seed == 0
    assert config.output_dir == Path("out")


@pytest.mark.parametrize(
    "data, where",
    [
        ({"risk": {"gamma": 0.0}}, "risk.gamma"),
        ({"risk": {"gamma": 1.5}}, "risk.gamma"),
        ({"risk": {"hops": 0}}, "risk.hops"),
        ({"kernel": {"eta": 0}}, "kernel.eta"),
        ({"kernel": {"beta": -0.1}}, "kernel.beta"),
        ({"clustering": {"min_cluster_size": 1}}, "clustering.min_cluster_size"),
        ({"forecast": {"delta": 0}}, "forecast.delta"),
        ({"forecast": {"lags": 0}}, "forecast.lags"),
        ({"forecast": {"tau": -1}}, "forecast.tau"),
        ({"calls": {"radius_km": 0}}, "calls.radius_km"),
        ({"risk": {"what_if": [{"multiplier": 2.0}]}}, "risk.what_if.0.multiplier"),
        ({"seed": -1}, "seed"),
        ({"threads": 0}, "threads"),
        ({"inputs": {"ais_format": "json"}}, "inputs.ais_format"),
        ({"unknown": 1}, "unknown"),
    ],
)
def test_invalid_parameters_are_rejected(data, where):
    with pytest.raises(ConfigurationError, match=f"'{where}'"):
        build_config(data)


def test_ensemble_alphas_must_match():
    with pytest.raises(ConfigurationError, match="alphas"):
        build_config({"forecast": {"l2_values": [0.1, 0.01], "alphas": [1.0]}})
    with pytest.raises(ConfigurationError, match="sum to 1"):
        build_config({"forecast": {"l2_values": [0.1, 0.01], "alphas": [0.5, 0.6]}})


def test_cli_overrides_win(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"seed": 5, "threads": 2}), encoding="utf-8")
    assert load_config(path).seed == 5
    assert load_config(path, seed=9).seed == 9
    assert load_config(path, seed=None).seed == 5
    assert load_config(path, threads=4).threads == 4


def test_relative_paths_follow_config_file(tmp_path):
    path = tmp_path / "conf" / "config.json"
    path.parent.mkdir()
    path.write_text(json.dumps({"inputs": {"ports": "ports.csv"}, "output_dir": "run"}), encoding="utf-8")
    config = load_config(path)
    assert config.inputs.ports == tmp_path / "conf" / "ports.csv"
    assert config.output_dir == tmp_path / "conf" / "run"
    assert load_config(path, output_dir=Path("elsewhere")).output_dir == Path("elsewhere")


def test_invalid_json_reports_line(tmp_path):
    path = tmp_path / "config.json"
    path.write_text('{\n  "seed": 1,\n}\n', encoding="utf-8")
    with pytest.raises(ConfigurationError) as exc:
        load_config(path)
    assert exc.value.line == 3


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigurationError, match="not found"):
        load_config(tmp_path / "absent.json")


def test_validate_inputs(tmp_path):
    ports = tmp_path / "ports.csv"
    ports.write_text("port_id,name,latitude,longitude,capacity\n", encoding="utf-8")
    config = build_config({"inputs": {"ports": str(ports), "climate": str(tmp_path / "nope.csv")}})
    with pytest.raises(ConfigurationError, match="'climate' not found"):
        validate_inputs(config)
    with pytest.raises(ConfigurationError, match="'ais' is not configured"):
        validate_inputs(build_config({"inputs": {"ports": str(ports)}}), ("ports", "ais"))
    validate_inputs(build_config({"inputs": {"ports": str(ports)}}), ("ports",))
