"""Shared pytest fixtures."""

from pathlib import Path

import pytest

from invasionrisk.core.config import load_config
from invasionrisk.core.fixture import generate_fixture
from invasionrisk.core.pipeline import run_pipeline

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture
def write_text(tmp_path):
    """Write a small text file under tmp_path and return its path."""

    def _write(name: str, content: str) -> Path:
        path = tmp_path / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(content, encoding="utf-8")
        return path

    return _write


@pytest.fixture(scope="session")
def scenario_files(tmp_path_factory):
    return generate_fixture(tmp_path_factory.mktemp("scenario"), seed=0)


@pytest.fixture(scope="session")
def scenario_run(scenario_files):
    """Full pipeline over the Nova Scotia scenario, run once per session."""
    config = load_config(scenario_files.config)
    manifest = run_pipeline(config)
    return config, manifest
