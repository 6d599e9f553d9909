from datetime import datetime, timezone

import numpy as np
import pandas as pd
import pytest
import scipy.sparse as sp

from invasionrisk.core.ais import Voyage
from invasionrisk.core.mobility import (
    MobilitySnapshot,
    aggregate_snapshots,
    build_snapshots,
    edge_history,
    snapshot_at,
)
from invasionrisk.utils.exceptions import (
    ConfigurationError,
    DataIntegrityError,
    RangeError,
    RegistryError,
)
from invasionrisk.utils.helpers import month_index_of

PORTS = ("HFX", "SYD", "CNS", "RTM", "GOT")
APRIL_2024 = 2024 * 12 + 3


def ts(year, month, day=15, hour=0):
    return datetime(year, month, day, hour, tzinfo=timezone.utc).timestamp()


def voyage(origin, destination, arrive, mmsi=244100001):
    return Voyage(mmsi, origin, destination, arrive - 9 * 86400.0, arrive, 24.0)


def test_repeated_voyages_add_up():
    voyages = [voyage("RTM", "HFX", ts(2024, 4, day)) for day in (2, 9, 16, 23)]
    (snap,) = build_snapshots(voyages, PORTS)
    assert snap.month_index == APRIL_2024
    assert snap.weight(PORTS.index("RTM"), PORTS.index("HFX")) == 4
    assert snap.weight(PORTS.index("HFX"), PORTS.index("RTM")) == 0
    assert snap.total == 4


def test_empty_months_are_kept():
    voyages = [voyage("RTM", "HFX", ts(2024, 1)), voyage("HFX", "SYD", ts(2024, 4))]
    snapshots = build_snapshots(voyages, PORTS)
    assert [s.month_index for s in snapshots] == list(range(2024 * 12, APRIL_2024 + 1))
    assert snapshots[1].total == 0


def test_counts_match_group_by():
    rng = np.random.default_rng(7)
    voyages = []
    for _ in range(400):
        i, j = rng.choice(len(PORTS), size=2, replace=False)
        month = int(rng.integers(1, 13))
        voyages.append(voyage(PORTS[i], PORTS[j], ts(2023, month, int(rng.integers(1, 28)))))
    snapshots = build_snapshots(voyages, PORTS, (2023 * 12, 2023 * 12 + 11))

    frame = pd.DataFrame(
        [(v.month_index, v.origin, v.destination) for v in voyages],
        columns=["month", "origin", "destination"],
    )
    counts = frame.groupby(["month", "origin", "destination"]).size()
    for (month, origin, destination), count in counts.items():
        snap = snapshot_at(snapshots, month)
        assert snap.weight(PORTS.index(origin), PORTS.index(destination)) == count
    assert sum(s.total for s in snapshots) == len(voyages)


def test_snapshots_ignore_voyage_order():
    rng = np.random.default_rng(12)
    voyages = []
    for _ in range(200):
        i, j = rng.choice(len(PORTS), size=2, replace=False)
        voyages.append(voyage(PORTS[i], PORTS[j], ts(2023, int(rng.integers(1, 13)))))
    base = build_snapshots(voyages, PORTS)
    shuffled = build_snapshots([voyages[k] for k in rng.permutation(len(voyages))], PORTS)
    assert [s.month_index for s in shuffled] == [s.month_index for s in base]
    for a, b in zip(base, shuffled):
        assert np.array_equal(a.weights.toarray(), b.weights.toarray())
    assert sum(s.total for s in shuffled) == len(voyages)


def test_unknown_port_rejected():
    with pytest.raises(RegistryError):
        build_snapshots([voyage("RTM", "XXX", ts(2024, 4))], PORTS)


def test_voyage_outside_range_rejected():
    with pytest.raises(RangeError):
        build_snapshots([voyage("RTM", "HFX", ts(2024, 4))], PORTS, (2023 * 12, 2023 * 12 + 11))


def test_self_loop_rejected():
    with pytest.raises(DataIntegrityError):
        MobilitySnapshot(0, ("A", "B"), sp.csr_matrix(np.array([[1, 0], [0, 0]])))


def _linear_recency(history, t, horizon):
    for k in range(0, t + 1):
        if k > horizon:
            break
        if history[t - k] > 0:
            return k
    return horizon


@pytest.mark.parametrize("seed", range(5))
def test_lags_and_recency_match_linear_scan(seed):
    rng = np.random.default_rng(seed)
    months = 30
    active = rng.random(months) < 0.25
    voyages = [
        voyage("HFX", "SYD", ts(2022 + m // 12, m % 12 + 1), mmsi=316300001)
        for m in range(months)
        if active[m]
    ]
    start = 2022 * 12
    snapshots = build_snapshots(voyages, PORTS, (start, start + months - 1))
    history = [s.weight(0, 1) for s in snapshots]
    for t in range(months):
        got = edge_history(snapshots, (0, 1), start + t, lags=3, horizon=12)
        expected_lags = tuple(history[t - k] if t - k >= 0 else 0 for k in range(3))
        assert got.lags == expected_lags
        assert got.recency == _linear_recency(history, t, 12)


def test_edge_history_bounds():
    snapshots = build_snapshots([voyage("RTM", "HFX", ts(2024, 4))], PORTS)
    with pytest.raises(RangeError):
        edge_history(snapshots, (3, 0), APRIL_2024 + 1, lags=3)
    with pytest.raises(ConfigurationError):
        edge_history(snapshots, (3, 0), APRIL_2024, lags=0)


def test_trailing_window_aggregation():
    voyages = [voyage("RTM", "HFX", ts(2024, m)) for m in (1, 2, 3)]
    snapshots = aggregate_snapshots(build_snapshots(voyages, PORTS), 2)
    assert [s.total for s in snapshots] == [1, 2, 2]
    assert all(s.window == 2 for s in snapshots)


def test_month_index_uses_arrival():
    v = voyage("RTM", "HFX", ts(2024, 5, 1, 3))
    assert v.month_index == month_index_of(ts(2024, 5, 1)) == 2024 * 12 + 4
