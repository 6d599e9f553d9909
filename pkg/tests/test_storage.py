import re

import numpy as np
import pandas as pd
import pytest

from invasionrisk.core.ais import Voyage
from invasionrisk.core.clustering import NOISE, ClusterLabeling
from invasionrisk.core.forecast import PROBABILITY_FLOOR
from invasionrisk.core.mobility import build_snapshots
from invasionrisk.core.similarity import SimilarityMatrix
from invasionrisk.core.storage import ArtifactStore
from invasionrisk.utils.exceptions import IncompleteRunError
from invasionrisk.utils.helpers import params_hash

PORTS = ("HFX", "SYD", "CNS")
T0 = 1_711_929_600.0  # 2024-04-01T00:00:00Z


@pytest.fixture
def store(tmp_path):
    return ArtifactStore(tmp_path / "out")


def test_layout_and_header(store):
    frame = pd.DataFrame({"port_id": ["HFX"], "value": [1 / 3]})
    path = store.write_frame("demo.csv", frame, "cluster", {"min_samples": 5})
    lines = path.read_text(encoding="utf-8").splitlines()
    assert re.fullmatch(r"# stage=cluster params=[0-9a-f]{12}", lines[0])
    assert lines[0].endswith(params_hash({"min_samples": 5}))
    assert lines[2] == "HFX,0.333333333333"
    assert store.stage_of("demo.csv") == "cluster"
    assert store.list_artifacts() == ["demo.csv"]
    assert (store.base_path / "reports").is_dir()


def test_params_hash_is_order_independent():
    assert params_hash({"a": 1, "b": 2}) == params_hash({"b": 2, "a": 1})
    assert params_hash({"a": 1}) != params_hash({"a": 2})


def test_missing_artifact_is_incomplete_run(store):
    with pytest.raises(IncompleteRunError):
        store.read_frame("features.csv")
    with pytest.raises(IncompleteRunError):
        store.read_json("report.json", report=True)


def test_matrix_round_trip(store):
    values = np.array([[1.0, 0.25, 0.1], [0.25, 1.0, 0.5], [0.1, 0.5, 1.0]])
    store.write_matrix("similarity.csv", SimilarityMatrix(PORTS, values), "similarity", {})
    again = store.read_matrix("similarity.csv", SimilarityMatrix)
    assert again.port_ids == PORTS
    assert np.array_equal(again.values, values)


def test_clusters_round_trip(store):
    labeling = ClusterLabeling(PORTS, (1, 1, NOISE), {1: 2.5})
    store.write_clusters(labeling, {})
    again = store.read_clusters()
    assert again.labels == (1, 1, NOISE)
    assert again.stabilities == {1: 2.5}


def test_voyages_and_snapshots_round_trip(store):
    voyages = [
        Voyage(316300001, "HFX", "CNS", T0, T0 + 14 * 3600.0, 24.0),
        Voyage(316300001, "CNS", "SYD", T0 + 86400.0 * 62, T0 + 86400.0 * 63, 30.0),
    ]
    store.write_voyages(voyages, {})
    assert store.read_voyages() == voyages

    snapshots = build_snapshots(voyages, PORTS)
    store.write_snapshots(snapshots, {})
    again = store.read_snapshots(PORTS)
    assert [s.month_index for s in again] == [s.month_index for s in snapshots]
    assert again[1].total == 0
    assert again[2].weight(2, 1) == 1


def test_predictions_round_trip_keeps_floor_on_diagonal(store):
    Y = np.array([[PROBABILITY_FLOOR, 0.2, 0.3], [0.4, PROBABILITY_FLOOR, 0.5], [0.6, 0.7, PROBABILITY_FLOOR]])
    store.write_predictions({24291: Y}, PORTS, {})
    again = store.read_predictions(PORTS)
    assert list(again) == [24291]
    assert np.array_equal(again[24291], Y)


def test_json_documents(store):
    store.write_json("what_if.json", {"b": 1, "a": [1, 2]})
    text = store.path("what_if.json").read_text(encoding="utf-8")
    assert text.index('"a"') < text.index('"b"')
    assert store.read_json("what_if.json") == {"a": [1, 2], "b": 1}
