"""Environmental similarity, scenario deltas and the cluster-reinforced kernel."""

import logging
from dataclasses import dataclass
from typing import ClassVar, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.spatial.distance import cdist

from invasionrisk.core.climate import FeatureVector, feature_matrix
from invasionrisk.core.clustering import NOISE, ClusterLabeling
from invasionrisk.utils.exceptions import (
    AlignmentError,
    ConfigurationError,
    DimensionError,
    DomainError,
    EmptyDatasetError,
)

logger = logging.getLogger(__name__)

SYMMETRY_TOLERANCE = 1e-12
SIMILARITY_SOURCES = ("auto", "base", "scenario")


@dataclass(frozen=True)
class KernelParams:
    eta: float = 1.0
    beta: float = 0.5
    clamp: bool = True

    def __post_init__(self) -> None:
        if not self.eta > 0:
            raise ConfigurationError(f"eta must be > 0, got {self.eta}")
        if not self.beta >= 0:
            raise ConfigurationError(f"beta must be >= 0, got {self.beta}")


@dataclass(frozen=True)
class PortMatrix:
    """Dense matrix indexed by port order on both axes."""

    port_ids: Tuple[str, ...]
    values: np.ndarray

    kind: ClassVar[str] = "matrix"

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        n = len(self.port_ids)
        if values.shape != (n, n):
            raise DimensionError(
                f"{self.kind} has shape {values.shape} for {n} ports"
            )
        object.__setattr__(self, "port_ids", tuple(self.port_ids))
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.port_ids)

    def index_of(self, port_id: str) -> int:
        try:
            return self.port_ids.index(port_id)
        except ValueError:
            raise AlignmentError(f"Port {port_id!r} not in {self.kind} order")

    def get(self, origin: str, destination: str) -> float:
        return float(self.values[self.index_of(origin), self.index_of(destination)])

    def require_same_order(self, other: "PortMatrix") -> None:
        if self.port_ids != other.port_ids:
            raise AlignmentError(
                f"Port order of {other.kind} does not match {self.kind}"
            )

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.values, index=list(self.port_ids), columns=list(self.port_ids))
        frame.index.name = "port_id"
        return frame

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> "PortMatrix":
        rows = [str(p) for p in frame.index]
        columns = [str(c) for c in frame.columns]
        if rows != columns:
            raise AlignmentError(f"Row and column port orders differ in {cls.kind}")
        return cls(tuple(rows), frame.to_numpy(dtype=float))


class SimilarityMatrix(PortMatrix):
    """Symmetric similarities in (0, 1] with unit diagonal."""

    kind = "similarity matrix"

    def __post_init__(self) -> None:
        super().__post_init__()
        v = self.values
        if not np.allclose(v, v.T, rtol=0.0, atol=SYMMETRY_TOLERANCE):
            raise DomainError("Similarity matrix is not symmetric")
        if np.any(v <= 0) or np.any(v > 1):
            raise DomainError("Similarity entries must lie in (0, 1]")
        if not np.all(np.diag(v) == 1.0):
            raise DomainError("Similarity diagonal must be exactly 1")


class KernelMatrix(PortMatrix):
    kind = "kernel matrix"


def similarity(d: float) -> float:
    """Map a nonnegative distance to (0, 1] as 1 / (1 + d)."""
    if d < 0 or np.isnan(d):
        raise DomainError(f"Distance must be >= 0, got {d}")
    return 1.0 / (1.0 + d)


def similarity_matrix(features: Sequence[FeatureVector]) -> SimilarityMatrix:
    if not features:
        raise EmptyDatasetError("No feature vectors to compare")
    matrix = feature_matrix(features)
    distances = cdist(matrix, matrix)
    distances = (distances + distances.T) / 2.0
    values = 1.0 / (1.0 + distances)
    np.fill_diagonal(values, 1.0)
    return SimilarityMatrix(tuple(f.port_id for f in features), values)


def delta_similarity(base: SimilarityMatrix, scenario: SimilarityMatrix) -> PortMatrix:
    """Elementwise scenario minus base."""
    base.require_same_order(scenario)
    return PortMatrix(base.port_ids, scenario.values - base.values)


def zero_delta(base: SimilarityMatrix) -> PortMatrix:
    return PortMatrix(base.port_ids, np.zeros_like(base.values))


def same_cluster_mask(labels: np.ndarray) -> np.ndarray:
    """Pairs sharing a non-noise label; noise matches nothing."""
    labels = np.asarray(labels)
    return (labels[:, None] == labels[None, :]) & (labels[:, None] != NOISE)


def kernel(
    S: SimilarityMatrix,
    labeling: ClusterLabeling,
    params: Optional[KernelParams] = None,
) -> KernelMatrix:
    """kappa_ij = S_ij**eta * (1 + beta * same_cluster), optionally clamped to 1."""
    params = params or KernelParams()
    labels = labeling.aligned_labels(S.port_ids)
    bonus = 1.0 + params.beta * same_cluster_mask(labels)
    values = np.power(S.values, params.eta) * bonus
    if params.clamp:
        values = np.minimum(values, 1.0)
    logger.debug(
        f"Kernel eta={params.eta} beta={params.beta} clamp={params.clamp} "
        f"over {len(S)} ports"
    )
    return KernelMatrix(S.port_ids, values)


def choose_similarity_source(
    source: str, base: SimilarityMatrix, scenario: Optional[SimilarityMatrix]
) -> SimilarityMatrix:
    """Pick the similarity matrix the kernel is built from."""
    if source not in SIMILARITY_SOURCES:
        raise ConfigurationError(
            f"similarity_source must be one of {SIMILARITY_SOURCES}, got {source!r}"
        )
    if source == "scenario":
        if scenario is None:
            raise ConfigurationError(
                "similarity_source 'scenario' needs a scenario climate file"
            )
        return scenario
    if source == "auto" and scenario is not None:
        return scenario
    return base
