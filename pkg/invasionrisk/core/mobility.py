"""Monthly directed port graphs built from voyages, and edge histories."""

import logging
from collections import Counter
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from invasionrisk.core.ais import Voyage
from invasionrisk.utils.exceptions import (
    ConfigurationError,
    DataIntegrityError,
    EmptyDatasetError,
    RangeError,
    RegistryError,
)

logger = logging.getLogger(__name__)

DEFAULT_RECENCY_HORIZON = 24

Pair = Tuple[int, int]


@dataclass(frozen=True)
class MobilitySnapshot:
    """Voyage counts w_ij arriving in one month (or a trailing window)."""

    month_index: int
    port_ids: Tuple[str, ...]
    weights: sp.csr_matrix
    window: int = 1

    def __post_init__(self) -> None:
        n = len(self.port_ids)
        weights = sp.csr_matrix(self.weights, dtype=np.int64)
        if weights.shape != (n, n):
            raise DataIntegrityError(
                f"Snapshot {self.month_index} has shape {weights.shape} for {n} ports"
            )
        if weights.nnz and weights.data.min() < 0:
            raise DataIntegrityError(f"Negative weight in snapshot {self.month_index}")
        if weights.diagonal().any():
            raise DataIntegrityError(f"Self-loop in snapshot {self.month_index}")
        weights.eliminate_zeros()
        weights.sort_indices()
        object.__setattr__(self, "port_ids", tuple(self.port_ids))
        object.__setattr__(self, "weights", weights)

    @property
    def total(self) -> int:
        return int(self.weights.sum())

    def weight(self, i: int, j: int) -> int:
        return int(self.weights[i, j])

    def edges(self) -> List[Tuple[int, int, int]]:
        coo = self.weights.tocoo()
        return sorted(zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()))


@dataclass(frozen=True)
class EdgeHistory:
    pair: Pair
    lags: Tuple[int, ...]
    recency: int


def build_snapshots(
    voyages: Sequence[Voyage],
    port_ids: Sequence[str],
    month_range: Optional[Tuple[int, int]] = None,
) -> List[MobilitySnapshot]:
    """One snapshot per month of the (inclusive) range, empty months included.

    Without an explicit range the timeline spans the first to the last
    arrival month.
    """
    index = {p: i for i, p in enumerate(port_ids)}
    unknown = sorted(
        {v.origin for v in voyages if v.origin not in index}
        | {v.destination for v in voyages if v.destination not in index}
    )
    if unknown:
        raise RegistryError(f"Voyages reference unknown ports {unknown}")

    months = [v.month_index for v in voyages]
    if month_range is None:
        if not voyages:
            return []
        month_range = (min(months), max(months))
    start, end = month_range
    if end < start:
        raise RangeError(f"Empty month range {start}..{end}")
    outside = [m for m in months if not start <= m <= end]
    if outside:
        raise RangeError(
            f"{len(outside)} voyages arrive outside months {start}..{end}"
        )

    counts = Counter((v.month_index, index[v.origin], index[v.destination]) for v in voyages)
    n = len(port_ids)
    buckets: Dict[int, List[Tuple[int, int, int]]] = {m: [] for m in range(start, end + 1)}
    for (month, i, j), count in sorted(counts.items()):
        buckets[month].append((i, j, count))

    snapshots = []
    for month in range(start, end + 1):
        cells = buckets[month]
        rows = [c[0] for c in cells]
        cols = [c[1] for c in cells]
        data = [c[2] for c in cells]
        weights = sp.coo_matrix((data, (rows, cols)), shape=(n, n), dtype=np.int64)
        snapshots.append(MobilitySnapshot(month, tuple(port_ids), weights.tocsr()))

    logger.info(
        f"Built {len(snapshots)} monthly snapshots with {len(voyages)} voyages"
    )
    return snapshots


def aggregate_snapshots(
    snapshots: Sequence[MobilitySnapshot], months: int
) -> List[MobilitySnapshot]:
    """Trailing-window sums: snapshot m holds months m-months+1..m."""
    if months < 1:
        raise ConfigurationError(f"aggregate_months must be >= 1, got {months}")
    if months == 1:
        return list(snapshots)
    out = []
    for k, snap in enumerate(snapshots):
        window = snapshots[max(0, k - months + 1) : k + 1]
        total = sum((s.weights for s in window[1:]), window[0].weights.copy())
        out.append(MobilitySnapshot(snap.month_index, snap.port_ids, total, window=months))
    return out


def snapshot_range(snapshots: Sequence[MobilitySnapshot]) -> Tuple[int, int]:
    if not snapshots:
        raise EmptyDatasetError("No mobility snapshots")
    return snapshots[0].month_index, snapshots[-1].month_index


def snapshot_at(snapshots: Sequence[MobilitySnapshot], month_index: int) -> MobilitySnapshot:
    start, end = snapshot_range(snapshots)
    if not start <= month_index <= end:
        raise RangeError(f"Month {month_index} outside snapshot range {start}..{end}")
    return snapshots[month_index - start]


def pair_series(snapshots: Sequence[MobilitySnapshot]) -> Dict[Pair, np.ndarray]:
    """Weight history over the timeline for every pair active at least once."""
    series: Dict[Pair, np.ndarray] = {}
    for k, snap in enumerate(snapshots):
        for i, j, w in snap.edges():
            if (i, j) not in series:
                series[(i, j)] = np.zeros(len(snapshots), dtype=np.int64)
            series[(i, j)][k] = w
    return dict(sorted(series.items()))


def history_from_series(
    weights: np.ndarray,
    position: int,
    lags: int,
    horizon: int = DEFAULT_RECENCY_HORIZON,
) -> Tuple[np.ndarray, int]:
    """Lag vector and recency at a timeline position of one pair's history."""
    lag_values = np.zeros(lags, dtype=np.int64)
    for k in range(lags):
        if position - k >= 0:
            lag_values[k] = weights[position - k]
    recency = horizon
    for k in range(min(horizon, position) + 1):
        if weights[position - k] > 0:
            recency = k
            break
    return lag_values, recency


def edge_history(
    snapshots: Sequence[MobilitySnapshot],
    pair: Pair,
    t: int,
    lags: int,
    horizon: int = DEFAULT_RECENCY_HORIZON,
) -> EdgeHistory:
    """Recent weights [w_t, ..., w_t-L+1] and months since the pair was last active."""
    if lags < 1:
        raise ConfigurationError(f"Lag depth must be >= 1, got {lags}")
    start, end = snapshot_range(snapshots)
    if not start <= t <= end:
        raise RangeError(f"Month {t} outside snapshot range {start}..{end}")
    i, j = pair
    position = t - start
    history = np.array([snapshots[k].weight(i, j) for k in range(position + 1)], dtype=np.int64)
    lag_values, recency = history_from_series(history, position, lags, horizon)
    return EdgeHistory(pair, tuple(int(x) for x in lag_values), recency)
