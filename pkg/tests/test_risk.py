import math

import numpy as np
import pytest

from invasionrisk.core.ais import Voyage
from invasionrisk.core.risk import (
    AGGREGATE_MARKER,
    PORT_AGGREGATE,
    SHIPMENT,
    ExposureVector,
    RiskAdjacency,
    RiskParams,
    ShipmentScore,
    WhatIfRule,
    compute_exposure,
    exposure_reduction,
    multi_hop_exposure,
    one_hop_exposure,
    rank_triplets,
    residence_factor,
    risk_adjacency,
    shipment_risk,
    voyage_paths,
    what_if_reweight,
)
from invasionrisk.core.similarity import KernelMatrix, PortMatrix
from invasionrisk.utils.exceptions import (
    AlignmentError,
    ConfigurationError,
    DomainError,
    PathError,
)

DAY = 86400.0


def random_adjacency(rng, n, density=0.3):
    values = rng.random((n, n)) * (rng.random((n, n)) < density)
    np.fill_diagonal(values, 0.0)
    return RiskAdjacency(tuple(f"P{i}" for i in range(n)), values)


def walk_exposure(A, gamma, hops):
    """Sum over every walk of 1..hops edges of gamma^(h-1) times the edge product."""
    n = A.shape[0]
    total = np.zeros(n)

    def extend(node, weight, length):
        for nxt in range(n):
            if A[node, nxt] == 0:
                continue
            w = weight * A[node, nxt]
            total[nxt] += gamma ** length * w
            if length + 1 < hops:
                extend(nxt, w, length + 1)

    for start in range(n):
        extend(start, 1.0, 0)
    return total


@pytest.mark.parametrize("seed", range(100))
def test_multi_hop_matches_walk_enumeration(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 9))
    gamma = float(rng.choice([0.3, 0.6, 1.0]))
    hops = int(rng.integers(1, 5))
    A = random_adjacency(rng, n)
    got = multi_hop_exposure(A, gamma, hops).values
    assert np.allclose(got, walk_exposure(A.values, gamma, hops), rtol=0.0, atol=1e-10)


def test_single_hop_equals_one_hop_exposure():
    A = random_adjacency(np.random.default_rng(5), 6, density=0.6)
    assert np.array_equal(multi_hop_exposure(A, 0.6, 1).values, one_hop_exposure(A).values)


def test_one_hop_is_column_sum():
    A = RiskAdjacency(("A", "B", "C"), np.array([[0, 0.2, 0.1], [0.4, 0, 0.0], [0.3, 0.5, 0]]))
    assert one_hop_exposure(A).values == pytest.approx([0.7, 0.7, 0.1])


def test_exposure_is_monotone():
    rng = np.random.default_rng(11)
    A = random_adjacency(rng, 6, density=0.5)
    base = multi_hop_exposure(A, 0.6, 3).values
    bigger = A.values.copy()
    bigger[0, 1] += 0.5
    raised = multi_hop_exposure(RiskAdjacency(A.port_ids, bigger), 0.6, 3).values
    assert np.all(raised >= base - 1e-12)
    assert np.all(multi_hop_exposure(A, 0.6, 4).values >= base - 1e-12)
    assert np.all(multi_hop_exposure(A, 0.9, 3).values >= base - 1e-12)


@pytest.mark.parametrize("seed", range(3))
def test_exposure_grows_with_gamma(seed):
    A = random_adjacency(np.random.default_rng(seed), 7, density=0.4)
    series = [multi_hop_exposure(A, gamma, 3).values for gamma in (0.1, 0.4, 0.7, 1.0)]
    for low, high in zip(series, series[1:]):
        assert np.all(high >= low - 1e-12)


def test_single_hop_exposure_is_linear():
    A = random_adjacency(np.random.default_rng(8), 6, density=0.6)
    scaled = RiskAdjacency(A.port_ids, 0.35 * A.values)
    assert np.allclose(one_hop_exposure(scaled).values, 0.35 * one_hop_exposure(A).values)
    assert np.allclose(multi_hop_exposure(scaled, 0.6, 1).values, 0.35 * multi_hop_exposure(A, 0.6, 1).values)


def test_risk_adjacency_drops_diagonal():
    Y = PortMatrix(("A", "B"), np.array([[1e-9, 0.8], [0.5, 1e-9]]))
    K = KernelMatrix(("A", "B"), np.array([[1.0, 0.5], [0.5, 1.0]]))
    A = risk_adjacency(Y, K, 5)
    assert A.values.tolist() == [[0.0, 0.4], [0.25, 0.0]]
    assert A.month_index == 5


def test_risk_adjacency_validation():
    with pytest.raises(DomainError):
        RiskAdjacency(("A", "B"), np.array([[0.1, 0.2], [0.3, 0.0]]))
    with pytest.raises(DomainError):
        multi_hop_exposure(RiskAdjacency(("A", "B"), np.zeros((2, 2))), 0.0, 2)


def test_inbound_inspection_with_zero_multiplier():
    A = random_adjacency(np.random.default_rng(2), 5, density=0.8)
    rule = WhatIfRule(0.0, inbound=("P2",))
    after = what_if_reweight(A, rule.expand(A.port_ids), rule.multiplier)
    assert one_hop_exposure(after).get("P2") == 0.0
    assert np.all(after.values[:, 2] == 0.0)
    assert np.array_equal(after.values[:, 0], A.values[:, 0])


def test_what_if_rule_rejects_unknown_port():
    with pytest.raises(AlignmentError):
        WhatIfRule(0.5, edges=(("A", "Z"),)).expand(("A", "B"))
    with pytest.raises(DomainError):
        WhatIfRule(1.5)


def test_exposure_reduction_reports_target():
    ports = ("A", "B")
    before = ExposureVector(ports, np.array([1.0, 3.0]))
    after = ExposureVector(ports, np.array([1.0, 2.0]))
    result = exposure_reduction(before, after, target_reduction=0.2)
    assert result["reduction"] == pytest.approx(0.25)
    assert result["meets_target"] is True
    assert result["ports"]["B"]["reduction"] == pytest.approx(1 / 3)


def _kernel():
    ports = ("A", "B", "C")
    values = np.array([[1.0, 0.5, 0.2], [0.5, 1.0, 0.5], [0.2, 0.5, 1.0]])
    return KernelMatrix(ports, values)


def test_two_hop_shipment_risk():
    score = shipment_risk(("A", "B", "C"), _kernel(), gamma=0.6)
    assert score.rho == pytest.approx(0.65)
    assert score.port_id == "C"


def test_shipment_risk_scales_with_voyage_factor():
    score = shipment_risk(("A", "B"), _kernel(), gamma=0.6, voyage_factor=0.5)
    assert score.rho == pytest.approx(0.25)


def test_single_hop_risk_is_the_kernel_value():
    rng = np.random.default_rng(8)
    for kappa in rng.random(50):
        K = KernelMatrix(("A", "B"), np.array([[1.0, kappa], [kappa, 1.0]]))
        assert shipment_risk(("A", "B"), K, gamma=float(rng.uniform(0.1, 1.0))).rho == pytest.approx(kappa)


def test_appending_a_hop_never_lowers_risk():
    rng = np.random.default_rng(9)
    ports = tuple("ABCDE")
    for _ in range(200):
        values = rng.random((5, 5)) * 1.5
        values = (values + values.T) / 2
        np.fill_diagonal(values, 1.0)
        K = KernelMatrix(ports, values)
        path = [str(rng.choice(ports))]
        while len(path) < int(rng.integers(2, 6)):
            path.append(str(rng.choice([p for p in ports if p != path[-1]])))
        nxt = str(rng.choice([p for p in ports if p != path[-1]]))
        gamma = float(rng.uniform(0.1, 1.0))
        assert shipment_risk(path + [nxt], K, gamma).rho >= shipment_risk(path, K, gamma).rho


@pytest.mark.parametrize("path", [("A",), ("A", "A", "B")])
def test_invalid_paths(path):
    with pytest.raises(PathError):
        shipment_risk(path, _kernel(), gamma=0.6)


def test_residence_factor():
    assert residence_factor(24.0) == 0.5
    assert residence_factor(60.0) == 1.0
    with pytest.raises(DomainError):
        residence_factor(0.0)


def test_voyage_paths_follow_connected_chains():
    t = 1_700_000_000.0
    voyages = [
        Voyage(7, "A", "B", t, t + DAY),
        Voyage(7, "B", "C", t + 2 * DAY, t + 3 * DAY),
        Voyage(7, "C", "A", t + 4 * DAY, t + 5 * DAY),
        Voyage(7, "B", "C", t + 6 * DAY, t + 7 * DAY),
    ]
    paths = [path for _, path in voyage_paths(voyages, path_hops=3)]
    assert paths == [("A", "B"), ("A", "B", "C"), ("A", "B", "C", "A"), ("B", "C")]
    assert [p for _, p in voyage_paths(voyages, path_hops=1)][2] == ("C", "A")


def test_ties_rank_by_port_id():
    A = RiskAdjacency(("SYD", "HFX"), np.array([[0.0, 0.5], [0.5, 0.0]]))
    triplets = rank_triplets([one_hop_exposure(A)], [])
    assert [t.port_id for t in triplets] == ["HFX", "SYD"]
    assert triplets[0].mmsi == AGGREGATE_MARKER
    assert triplets[0].kind == PORT_AGGREGATE
    assert triplets[0].score == pytest.approx(1 - math.exp(-0.5))


def test_ranking_orders_score_then_month():
    shipments = [
        ShipmentScore(316000001, ("A", "B"), 0.9, month_index=10),
        ShipmentScore(316000002, ("A", "C"), 0.9, month_index=9),
        ShipmentScore(316000003, ("B", "C"), 0.95, month_index=11),
        ShipmentScore(316000004, ("B", "C"), 0.0, month_index=11),
    ]
    triplets = rank_triplets([], shipments)
    assert [t.mmsi for t in triplets] == ["316000003", "316000002", "316000001"]
    assert [t.rank for t in triplets] == [1, 2, 3]
    assert all(t.kind == SHIPMENT for t in triplets)


def test_ranking_matches_stable_sort():
    rng = np.random.default_rng(21)
    shipments = []
    for _ in range(50):
        origin, destination = rng.choice(["HFX", "SYD", "CNS", "RTM"], size=2, replace=False)
        shipments.append(
            ShipmentScore(
                int(rng.integers(100000000, 100000010)),
                (str(origin), str(destination)),
                float(rng.choice([0.2, 0.5, 0.9])),
                month_index=int(rng.integers(600, 603)),
            )
        )
    expected = sorted(
        shipments, key=lambda s: (-s.rho, s.month_index, s.path[-1], f"{s.mmsi:09d}")
    )
    triplets = rank_triplets([], shipments)
    assert [(t.mmsi, t.port_id, t.month_index, t.score) for t in triplets] == [
        (f"{s.mmsi:09d}", s.path[-1], s.month_index, s.rho) for s in expected
    ]
    assert [t.rank for t in triplets] == list(range(1, 51))


def test_compute_exposure_over_months():
    K = _kernel()
    Y = np.full((3, 3), 0.5)
    np.fill_diagonal(Y, 1e-9)
    rule = WhatIfRule(0.5, inbound=("C",), name="inspect-c")
    report = compute_exposure({24290: Y, 24291: Y * 0.5}, K, RiskParams(), rules=[rule], target_reduction=0.1)
    assert report.months == [24290, 24291]
    assert report.one_hop.shape == (2, 3)
    assert report.one_hop[0] == pytest.approx([0.35, 0.5, 0.35])
    assert np.all(report.multi_hop >= report.one_hop)
    assert np.all(report.multi_hop[1] < report.multi_hop[0])
    assert len(report.what_if) == 2
    assert report.what_if[0]["reduction"] > 0
    assert report.triplets[0].month_index == 24290


def test_risk_params_validation():
    with pytest.raises(ConfigurationError):
        RiskParams(gamma=0.0)
    with pytest.raises(ConfigurationError):
        RiskParams(hops=0)
