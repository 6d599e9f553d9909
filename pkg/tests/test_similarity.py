import numpy as np
import pytest

from invasionrisk.core.climate import FeatureVector
from invasionrisk.core.clustering import NOISE, ClusterLabeling
from invasionrisk.core.similarity import (
    KernelParams,
    PortMatrix,
    SimilarityMatrix,
    choose_similarity_source,
    delta_similarity,
    kernel,
    similarity,
    similarity_matrix,
)
from invasionrisk.utils.exceptions import (
    AlignmentError,
    ConfigurationError,
    DimensionError,
    DomainError,
)

PORTS = ("A", "B", "C")


def test_similarity_of_distance():
    assert similarity(0.0) == 1.0
    assert similarity(0.25) == pytest.approx(0.8)
    assert similarity(1e9) > 0


def test_negative_distance_rejected():
    with pytest.raises(DomainError):
        similarity(-0.1)


def test_similarity_matrix_is_symmetric_with_unit_diagonal():
    features = [FeatureVector(p, v) for p, v in zip(PORTS, ([0.0, 0.0], [3.0, 4.0], [0.0, 1.0]))]
    S = similarity_matrix(features)
    assert np.array_equal(np.diag(S.values), np.ones(3))
    assert S.get("A", "B") == pytest.approx(1 / 6)
    assert S.get("B", "A") == S.get("A", "B")
    assert S.get("A", "C") == pytest.approx(0.5)


def test_similarity_matrix_validates_domain():
    with pytest.raises(DomainError):
        SimilarityMatrix(("A", "B"), np.array([[1.0, 0.5], [0.4, 1.0]]))
    with pytest.raises(DomainError):
        SimilarityMatrix(("A", "B"), np.array([[1.0, 0.0], [0.0, 1.0]]))


def _S():
    return SimilarityMatrix(
        PORTS, np.array([[1.0, 0.9, 0.5], [0.9, 1.0, 0.4], [0.5, 0.4, 1.0]])
    )


def test_kernel_adds_cluster_bonus_and_clamps():
    labeling = ClusterLabeling(PORTS, (1, 1, 2))
    K = kernel(_S(), labeling, KernelParams(eta=1.0, beta=0.5, clamp=True))
    assert K.get("A", "B") == 1.0
    assert K.get("A", "C") == pytest.approx(0.5)
    unclamped = kernel(_S(), labeling, KernelParams(eta=1.0, beta=0.5, clamp=False))
    assert unclamped.get("A", "B") == pytest.approx(1.35)


def test_kernel_noise_gets_no_bonus():
    labeling = ClusterLabeling(PORTS, (NOISE, NOISE, 1))
    K = kernel(_S(), labeling, KernelParams(eta=2.0, beta=0.5))
    assert K.get("A", "B") == pytest.approx(0.81)


def test_kernel_requires_labels_for_every_port():
    with pytest.raises(AlignmentError):
        kernel(_S(), ClusterLabeling(("A", "B"), (1, 1)))


def _random_similarity(seed, n=8):
    rng = np.random.default_rng(seed)
    ports = tuple(f"P{i}" for i in range(n))
    return similarity_matrix([FeatureVector(p, row) for p, row in zip(ports, rng.normal(size=(n, 4)))])


MIXED_LABELS = (1, 1, 2, 2, NOISE, 1, 2, NOISE)


def test_kernel_is_symmetric():
    S = _random_similarity(0)
    K = kernel(S, ClusterLabeling(S.port_ids, MIXED_LABELS), KernelParams(eta=1.7, beta=0.8, clamp=False))
    assert np.allclose(K.values, K.values.T, rtol=0.0, atol=1e-12)


def test_kernel_without_bonus_ignores_labels():
    S = _random_similarity(1)
    params = KernelParams(eta=1.3, beta=0.0)
    K = kernel(S, ClusterLabeling(S.port_ids, MIXED_LABELS), params)
    permuted = (2, NOISE, 1, 1, 2, NOISE, 2, 1)
    assert np.array_equal(kernel(S, ClusterLabeling(S.port_ids, permuted), params).values, K.values)


def test_kernel_decreases_with_eta():
    S = _random_similarity(2)
    labeling = ClusterLabeling(S.port_ids, MIXED_LABELS)
    low = kernel(S, labeling, KernelParams(eta=1.0, beta=0.5, clamp=False)).values
    high = kernel(S, labeling, KernelParams(eta=2.0, beta=0.5, clamp=False)).values
    below_one = S.values < 1.0
    assert below_one.sum() == 8 * 7
    assert np.all(high[below_one] < low[below_one])


def test_kernel_params_validation():
    with pytest.raises(ConfigurationError):
        KernelParams(eta=0.0)
    with pytest.raises(ConfigurationError):
        KernelParams(beta=-1.0)


def test_delta_similarity_is_scenario_minus_base():
    base = _S()
    scenario = SimilarityMatrix(PORTS, np.where(np.eye(3) == 1, 1.0, base.values * 0.5))
    delta = delta_similarity(base, scenario)
    assert delta.get("A", "B") == pytest.approx(-0.45)
    assert delta.get("A", "A") == 0.0


def test_delta_requires_same_port_order():
    reordered = SimilarityMatrix(("B", "A", "C"), _S().values)
    with pytest.raises(AlignmentError):
        delta_similarity(_S(), reordered)


def test_port_matrix_shape_checked():
    with pytest.raises(DimensionError):
        PortMatrix(PORTS, np.zeros((2, 2)))


def test_port_matrix_frame_round_trip():
    again = PortMatrix.from_frame(_S().to_frame())
    assert again.port_ids == PORTS
    assert np.array_equal(again.values, _S().values)


def test_similarity_source_selection():
    base, scenario = _S(), _S()
    assert choose_similarity_source("auto", base, None) is base
    assert choose_similarity_source("auto", base, scenario) is scenario
    assert choose_similarity_source("base", base, scenario) is base
    with pytest.raises(ConfigurationError):
        choose_similarity_source("scenario", base, None)
