"""Risk adjacency, exposure propagation, shipment scores and ranked triplets."""

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from invasionrisk.core.ais import Voyage
from invasionrisk.core.similarity import KernelMatrix, PortMatrix
from invasionrisk.utils.exceptions import (
    AlignmentError,
    ConfigurationError,
    DomainError,
    PathError,
)

logger = logging.getLogger(__name__)

AGGREGATE_MARKER = "*"
SHIPMENT = "shipment"
PORT_AGGREGATE = "port_aggregate"


@dataclass(frozen=True)
class RiskParams:
    gamma: float = 0.6
    hops: int = 3
    path_hops: int = 3
    residence_reference_hours: float = 48.0

    def __post_init__(self) -> None:
        if not 0 < self.gamma <= 1:
            raise ConfigurationError(f"gamma must be in (0, 1], got {self.gamma}")
        if self.hops < 1:
            raise ConfigurationError(f"hops must be >= 1, got {self.hops}")
        if self.path_hops < 1:
            raise ConfigurationError(f"path_hops must be >= 1, got {self.path_hops}")
        if not self.residence_reference_hours > 0:
            raise ConfigurationError("residence_reference_hours must be > 0")


@dataclass(frozen=True)
class RiskAdjacency(PortMatrix):
    """A = Y * K elementwise with a zero diagonal, for one target month."""

    month_index: int = 0
    kind = "risk adjacency"

    def __post_init__(self) -> None:
        super().__post_init__()
        if np.any(np.diag(self.values) != 0):
            raise DomainError("Risk adjacency diagonal must be zero")
        if np.any(self.values < 0) or not np.all(np.isfinite(self.values)):
            raise DomainError("Risk adjacency entries must be finite and >= 0")


@dataclass(frozen=True)
class ExposureVector:
    port_ids: Tuple[str, ...]
    values: np.ndarray
    gamma: float = 1.0
    hops: int = 1
    month_index: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))

    def get(self, port_id: str) -> float:
        try:
            return float(self.values[self.port_ids.index(port_id)])
        except ValueError:
            raise AlignmentError(f"Port {port_id!r} not in exposure order")


@dataclass(frozen=True)
class ShipmentScore:
    mmsi: int
    path: Tuple[str, ...]
    rho: float
    voyage_factor: float = 1.0
    month_index: int = 0

    @property
    def port_id(self) -> str:
        return self.path[-1]


@dataclass(frozen=True)
class RankedTriplet:
    rank: int
    mmsi: str
    port_id: str
    month_index: int
    score: float
    kind: str
    path: Tuple[str, ...] = ()


@dataclass(frozen=True)
class WhatIfRule:
    """Scale listed edges, or every edge into / out of listed ports."""

    multiplier: float
    edges: Tuple[Tuple[str, str], ...] = ()
    inbound: Tuple[str, ...] = ()
    outbound: Tuple[str, ...] = ()
    name: str = ""

    def __post_init__(self) -> None:
        if not 0 <= self.multiplier <= 1:
            raise DomainError(f"Multiplier must be in [0, 1], got {self.multiplier}")

    def expand(self, port_ids: Sequence[str]) -> List[Tuple[str, str]]:
        known = set(port_ids)
        listed = [p for e in self.edges for p in e] + list(self.inbound) + list(self.outbound)
        unknown = sorted({p for p in listed if p not in known})
        if unknown:
            raise AlignmentError(f"What-if rule references unknown ports {unknown}")
        edges = set(self.edges)
        edges |= {(o, d) for d in self.inbound for o in port_ids if o != d}
        edges |= {(o, d) for o in self.outbound for d in port_ids if o != d}
        return sorted(edges)


@dataclass
class ExposureReport:
    port_ids: Tuple[str, ...]
    months: List[int]
    one_hop: np.ndarray
    multi_hop: np.ndarray
    params: RiskParams
    triplets: List[RankedTriplet] = field(default_factory=list)
    shipments: List[ShipmentScore] = field(default_factory=list)
    what_if: List[Dict[str, object]] = field(default_factory=list)


def risk_adjacency(Y: PortMatrix, K: KernelMatrix, month_index: int = 0) -> RiskAdjacency:
    """Predicted link probability times environmental kernel, self-loops removed."""
    Y.require_same_order(K)
    if np.any(Y.values < 0) or np.any(Y.values > 1):
        raise DomainError("Predicted link probabilities must lie in [0, 1]")
    values = Y.values * K.values
    np.fill_diagonal(values, 0.0)
    return RiskAdjacency(Y.port_ids, values, month_index=month_index)


def _propagate(v: np.ndarray, A: np.ndarray) -> np.ndarray:
    # v^T A as an explicit reduction so H=1 matches one-hop bit for bit
    return np.sum(v[:, None] * A, axis=0)


def one_hop_exposure(A: RiskAdjacency) -> ExposureVector:
    """Column sums of A: inbound risk at each port."""
    values = _propagate(np.ones(len(A)), A.values)
    return ExposureVector(A.port_ids, values, 1.0, 1, A.month_index)


def multi_hop_exposure(A: RiskAdjacency, gamma: float, hops: int) -> ExposureVector:
    """E = sum_h gamma^(h-1) (A^h)^T 1 by repeated vector-matrix products."""
    if not 0 < gamma <= 1:
        raise DomainError(f"gamma must be in (0, 1], got {gamma}")
    if hops < 1:
        raise DomainError(f"hops must be >= 1, got {hops}")
    walk = np.ones(len(A))
    total = np.zeros(len(A))
    for h in range(1, hops + 1):
        walk = _propagate(walk, A.values)
        total = total + gamma ** (h - 1) * walk
    return ExposureVector(A.port_ids, total, gamma, hops, A.month_index)


def residence_factor(dwell_hours: float, reference_hours: float = 48.0) -> float:
    """Voyage factor min(1, dwell / reference) for the destination stay."""
    if not dwell_hours > 0:
        raise DomainError(f"Dwell must be > 0 hours, got {dwell_hours}")
    return min(1.0, dwell_hours / reference_hours)


def shipment_risk(
    path: Sequence[str],
    K: KernelMatrix,
    gamma: float,
    voyage_factor: float = 1.0,
    mmsi: int = 0,
    month_index: int = 0,
) -> ShipmentScore:
    """rho = 1 - prod_h (1 - min(1, gamma^(h-1) kappa_h)), scaled by the voyage factor."""
    if len(path) < 2:
        raise PathError(f"Path needs at least two ports, got {list(path)}")
    for a, b in zip(path, path[1:]):
        if a == b:
            raise PathError(f"Path repeats port {a!r} on consecutive stops")
    if not 0 < gamma <= 1:
        raise DomainError(f"gamma must be in (0, 1], got {gamma}")
    if not 0 < voyage_factor <= 1:
        raise DomainError(f"voyage_factor must be in (0, 1], got {voyage_factor}")

    survival = 1.0
    for h, (a, b) in enumerate(zip(path, path[1:]), start=1):
        survival *= 1.0 - min(1.0, gamma ** (h - 1) * K.get(a, b))
    rho = min(1.0, max(0.0, (1.0 - survival) * voyage_factor))
    return ShipmentScore(mmsi, tuple(path), rho, voyage_factor, month_index)


def voyage_paths(
    voyages: Iterable[Voyage], path_hops: int = 3
) -> List[Tuple[Voyage, Tuple[str, ...]]]:
    """Each voyage with the chain of up to path_hops voyages ending at it."""
    by_vessel: Dict[int, List[Voyage]] = defaultdict(list)
    for voyage in voyages:
        by_vessel[voyage.mmsi].append(voyage)

    out = []
    for mmsi in sorted(by_vessel):
        chain = sorted(by_vessel[mmsi], key=lambda v: (v.arrive, v.depart))
        for k, voyage in enumerate(chain):
            legs = [voyage]
            while len(legs) < path_hops and k - len(legs) >= 0:
                previous = chain[k - len(legs)]
                if previous.destination != legs[0].origin:
                    break
                legs.insert(0, previous)
            path = (legs[0].origin, *[leg.destination for leg in legs])
            out.append((voyage, path))
    return out


def shipment_scores(
    voyages: Sequence[Voyage], K: KernelMatrix, params: RiskParams
) -> List[ShipmentScore]:
    scores = []
    for voyage, path in voyage_paths(voyages, params.path_hops):
        factor = residence_factor(voyage.dwell_hours, params.residence_reference_hours)
        scores.append(
            shipment_risk(path, K, params.gamma, factor, voyage.mmsi, voyage.month_index)
        )
    return scores


def what_if_reweight(
    A: RiskAdjacency, edges: Sequence[Tuple[str, str]], multiplier: float
) -> RiskAdjacency:
    """Copy of A with the listed edges scaled by multiplier."""
    if not 0 <= multiplier <= 1:
        raise DomainError(f"Multiplier must be in [0, 1], got {multiplier}")
    values = A.values.copy()
    for origin, destination in edges:
        values[A.index_of(origin), A.index_of(destination)] *= multiplier
    return RiskAdjacency(A.port_ids, values, month_index=A.month_index)


def apply_rules(A: RiskAdjacency, rules: Sequence[WhatIfRule]) -> RiskAdjacency:
    for rule in rules:
        A = what_if_reweight(A, rule.expand(A.port_ids), rule.multiplier)
    return A


def exposure_reduction(
    before: ExposureVector,
    after: ExposureVector,
    target_reduction: Optional[float] = None,
) -> Dict[str, object]:
    """Per-port and total relative reduction of exposure."""
    if before.port_ids != after.port_ids:
        raise AlignmentError("Exposure port orders differ")
    per_port = {}
    for port, b, a in zip(before.port_ids, before.values, after.values):
        per_port[port] = {
            "before": float(b),
            "after": float(a),
            "reduction": float((b - a) / b) if b > 0 else 0.0,
        }
    total_before = float(before.values.sum())
    total_after = float(after.values.sum())
    reduction = (total_before - total_after) / total_before if total_before > 0 else 0.0
    result: Dict[str, object] = {
        "month_index": before.month_index,
        "total_before": total_before,
        "total_after": total_after,
        "reduction": reduction,
        "ports": per_port,
    }
    if target_reduction is not None:
        result["target_reduction"] = target_reduction
        result["meets_target"] = reduction >= target_reduction
    return result


def aggregate_score(exposure: float) -> float:
    """Saturating map of multi-hop exposure onto [0, 1)."""
    return 1.0 - math.exp(-exposure)


def rank_triplets(
    exposures: Sequence[ExposureVector], shipments: Sequence[ShipmentScore]
) -> List[RankedTriplet]:
    """Descending score; ties by earlier month, then port_id, then mmsi."""
    rows: List[Tuple[float, int, str, str, str, Tuple[str, ...]]] = []
    for exposure in exposures:
        for port, value in zip(exposure.port_ids, exposure.values):
            score = aggregate_score(float(value))
            if score > 0:
                rows.append((score, exposure.month_index, port, AGGREGATE_MARKER, PORT_AGGREGATE, ()))
    for shipment in shipments:
        if shipment.rho > 0:
            rows.append(
                (
                    shipment.rho,
                    shipment.month_index,
                    shipment.port_id,
                    f"{shipment.mmsi:09d}",
                    SHIPMENT,
                    shipment.path,
                )
            )
    rows.sort(key=lambda r: (-r[0], r[1], r[2], r[3]))
    return [
        RankedTriplet(rank, mmsi, port, month, score, kind, path)
        for rank, (score, month, port, mmsi, kind, path) in enumerate(rows, start=1)
    ]


def compute_exposure(
    predictions: Mapping[int, np.ndarray],
    K: KernelMatrix,
    params: RiskParams,
    voyages: Sequence[Voyage] = (),
    rules: Sequence[WhatIfRule] = (),
    target_reduction: Optional[float] = None,
) -> ExposureReport:
    """Exposure for every predicted month, shipment scores and ranked triplets."""
    months = sorted(predictions)
    one_hop, multi_hop, multi_vectors, what_if = [], [], [], []
    for month in months:
        Y = PortMatrix(K.port_ids, predictions[month])
        A = risk_adjacency(Y, K, month)
        one_hop.append(one_hop_exposure(A).values)
        multi = multi_hop_exposure(A, params.gamma, params.hops)
        multi_hop.append(multi.values)
        multi_vectors.append(multi)
        if rules:
            after = multi_hop_exposure(apply_rules(A, rules), params.gamma, params.hops)
            what_if.append(exposure_reduction(multi, after, target_reduction))

    shipments = shipment_scores(voyages, K, params)
    n = len(K)
    report = ExposureReport(
        port_ids=K.port_ids,
        months=months,
        one_hop=np.array(one_hop).reshape(len(months), n),
        multi_hop=np.array(multi_hop).reshape(len(months), n),
        params=params,
        triplets=rank_triplets(multi_vectors, shipments),
        shipments=shipments,
        what_if=what_if,
    )
    logger.info(
        f"Exposure over {len(months)} months, {len(shipments)} shipments, "
        f"{len(report.triplets)} ranked triplets"
    )
    return report
