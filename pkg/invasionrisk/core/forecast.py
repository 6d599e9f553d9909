"""Future link outcomes from edge histories: features, logistic models, ensembles."""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, ValidationError
from scipy.special import expit
from scipy.stats import rankdata

from invasionrisk.core.climate import PortRecord, Standardizer
from invasionrisk.core.clustering import NOISE, ClusterLabeling
from invasionrisk.core.mobility import (
    DEFAULT_RECENCY_HORIZON,
    MobilitySnapshot,
    snapshot_range,
)
from invasionrisk.core.similarity import PortMatrix, SimilarityMatrix, same_cluster_mask
from invasionrisk.utils.exceptions import (
    AlignmentError,
    ConfigurationError,
    DegenerateLabelError,
    DimensionError,
    EmptyDatasetError,
    MalformedSeriesError,
    RangeError,
    RegistryError,
    StorageError,
)
from invasionrisk.utils.helpers import save_json_file

logger = logging.getLogger(__name__)

PROBABILITY_FLOOR = 1e-9
PROBABILITY_CEILING = 1.0 - 1e-9
MODEL_FORMAT_VERSION = 1
EXOGENOUS_COLUMNS = ("port_id", "month_index", "name", "value")

Pair = Tuple[int, int]


@dataclass(frozen=True)
class EdgeFeatures:
    pair: Pair
    month: int
    vector: np.ndarray


@dataclass(frozen=True)
class LinkTarget:
    pair: Pair
    horizon: int
    label: int


@dataclass(frozen=True)
class EdgeFeatureLayout:
    """Column names of an edge feature vector and which columns get standardized."""

    columns: Tuple[str, ...]
    continuous: Tuple[bool, ...]

    @classmethod
    def build(
        cls, lags: int, n_clusters: int, exogenous_names: Sequence[str] = ()
    ) -> "EdgeFeatureLayout":
        columns: List[Tuple[str, bool]] = [(f"lag_{k}", True) for k in range(1, lags + 1)]
        columns += [
            ("recency", True),
            ("similarity", True),
            ("delta_similarity", True),
            ("same_cluster", False),
        ]
        columns += [(f"src_cluster_{k}", False) for k in range(1, n_clusters + 1)]
        columns += [(f"dst_cluster_{k}", False) for k in range(1, n_clusters + 1)]
        columns += [("capacity_src", True), ("capacity_dst", True)]
        names = sorted(exogenous_names)
        columns += [(f"exo_src_{name}", True) for name in names]
        columns += [(f"exo_dst_{name}", True) for name in names]
        if names:
            columns.append(("exo_missing", False))
        return cls(tuple(c for c, _ in columns), tuple(f for _, f in columns))

    def __len__(self) -> int:
        return len(self.columns)

    @property
    def continuous_mask(self) -> np.ndarray:
        return np.array(self.continuous, dtype=bool)


@dataclass(frozen=True)
class ExogenousTable:
    """Covariates x[port, month, name]; absent cells are missing."""

    values: Dict[Tuple[str, int, str], float] = field(default_factory=dict)

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(sorted({name for _, _, name in self.values}))

    def block(self, port_ids: Sequence[str], month: int) -> np.ndarray:
        """(names, ports) values for one month with NaN where missing."""
        out = np.full((len(self.names), len(port_ids)), np.nan)
        for a, name in enumerate(self.names):
            for b, port in enumerate(port_ids):
                value = self.values.get((port, month, name))
                if value is not None:
                    out[a, b] = value
        return out


def read_exogenous(path: Path, port_ids: Sequence[str]) -> ExogenousTable:
    try:
        frame = pd.read_csv(path, dtype={"port_id": str, "name": str}, comment="#")
    except pd.errors.EmptyDataError:
        raise EmptyDatasetError("Exogenous covariate file is empty", source=str(path))
    frame.columns = [str(c).strip() for c in frame.columns]
    missing = [c for c in EXOGENOUS_COLUMNS if c not in frame.columns]
    if missing:
        raise MalformedSeriesError(
            f"Missing columns {missing} in header", source=str(path), line=1
        )
    known = set(port_ids)
    values: Dict[Tuple[str, int, str], float] = {}
    for offset, row in enumerate(frame[list(EXOGENOUS_COLUMNS)].itertuples(index=False)):
        line = offset + 2
        port = str(row.port_id).strip()
        if port not in known:
            raise RegistryError(f"Unknown port_id {port!r}", source=str(path), line=line)
        try:
            key = (port, int(row.month_index), str(row.name).strip())
            value = float(row.value)
        except (TypeError, ValueError):
            raise MalformedSeriesError("Non-numeric covariate", source=str(path), line=line)
        if np.isfinite(value):
            values[key] = value
    logger.info(f"Read {len(values)} exogenous covariate values from {path}")
    return ExogenousTable(values)


class FeatureBuilder:
    """Raw edge feature rows for any month of the snapshot timeline."""

    def __init__(
        self,
        snapshots: Sequence[MobilitySnapshot],
        S: SimilarityMatrix,
        dS: PortMatrix,
        labeling: ClusterLabeling,
        ports: Sequence[PortRecord],
        exogenous: Optional[ExogenousTable] = None,
        lags: int = 3,
        horizon: int = DEFAULT_RECENCY_HORIZON,
    ):
        if lags < 1:
            raise ConfigurationError(f"lags must be >= 1, got {lags}")
        self.port_ids = S.port_ids
        S.require_same_order(dS)
        if snapshots and snapshots[0].port_ids != self.port_ids:
            raise AlignmentError("Snapshot port order does not match similarity order")
        capacity = {p.port_id: p.capacity for p in ports}
        missing = [p for p in self.port_ids if p not in capacity]
        if missing:
            raise AlignmentError(f"No registry entry for ports {missing}")

        self.snapshots = list(snapshots)
        self.start, self.end = snapshot_range(self.snapshots)
        self.similarity = S.values
        self.delta = dS.values
        self.labels = labeling.aligned_labels(self.port_ids)
        self.n_clusters = int(max([0, *self.labels.tolist()]))
        self.same_cluster = same_cluster_mask(self.labels).astype(float)
        self.capacity = np.array([capacity[p] for p in self.port_ids], dtype=float)
        self.exogenous = exogenous or ExogenousTable()
        self.lags = lags
        self.horizon = horizon
        self.layout = EdgeFeatureLayout.build(lags, self.n_clusters, self.exogenous.names)

    @property
    def n_ports(self) -> int:
        return len(self.port_ids)

    def history_block(self, t: int) -> Tuple[np.ndarray, np.ndarray]:
        """Dense lags (L, n, n) and recency (n, n) at month t."""
        if not self.start <= t <= self.end:
            raise RangeError(f"Month {t} outside snapshot range {self.start}..{self.end}")
        n = self.n_ports
        position = t - self.start
        lags = np.zeros((self.lags, n, n))
        for k in range(self.lags):
            if position - k >= 0:
                lags[k] = self.snapshots[position - k].weights.toarray()
        recency = np.full((n, n), float(self.horizon))
        found = np.zeros((n, n), dtype=bool)
        for k in range(min(self.horizon, position) + 1):
            active = self.snapshots[position - k].weights.toarray() > 0
            fresh = active & ~found
            recency[fresh] = k
            found |= active
        return lags, recency

    def rows(self, t: int, src: np.ndarray, dst: np.ndarray) -> np.ndarray:
        """Feature matrix for pairs (src[k], dst[k]) at month t."""
        lags, recency = self.history_block(t)
        parts = [lags[:, src, dst].T, recency[src, dst][:, None]]
        parts.append(self.similarity[src, dst][:, None])
        parts.append(self.delta[src, dst][:, None])
        parts.append(self.same_cluster[src, dst][:, None])
        if self.n_clusters:
            eye = np.vstack([np.zeros(self.n_clusters), np.eye(self.n_clusters)])
            onehot_index = np.where(self.labels == NOISE, 0, self.labels)
            parts.append(eye[onehot_index[src]])
            parts.append(eye[onehot_index[dst]])
        parts.append(self.capacity[src][:, None])
        parts.append(self.capacity[dst][:, None])
        if self.exogenous.names:
            block = self.exogenous.block(self.port_ids, t)
            exo_src = block[:, src].T
            exo_dst = block[:, dst].T
            missing = np.isnan(exo_src).any(axis=1) | np.isnan(exo_dst).any(axis=1)
            parts += [exo_src, exo_dst, missing[:, None].astype(float)]
        return np.hstack(parts)


@dataclass
class EdgeDataset:
    layout: EdgeFeatureLayout
    raw: np.ndarray
    y: np.ndarray
    pairs: np.ndarray
    months: np.ndarray
    delta: int
    tau: float
    train_mask: np.ndarray
    eval_mask: np.ndarray
    eval_start: Optional[int]
    standardizer: Standardizer
    X: np.ndarray

    def __len__(self) -> int:
        return int(self.y.shape[0])

    @property
    def X_train(self) -> np.ndarray:
        return self.X[self.train_mask]

    @property
    def y_train(self) -> np.ndarray:
        return self.y[self.train_mask]

    @property
    def X_eval(self) -> np.ndarray:
        return self.X[self.eval_mask]

    @property
    def y_eval(self) -> np.ndarray:
        return self.y[self.eval_mask]

    def edge_features(self) -> List[EdgeFeatures]:
        return [
            EdgeFeatures((int(p[0]), int(p[1])), int(t), row)
            for p, t, row in zip(self.pairs, self.months, self.X)
        ]

    def link_targets(self) -> List[LinkTarget]:
        return [
            LinkTarget((int(p[0]), int(p[1])), self.delta, int(label))
            for p, label in zip(self.pairs, self.y)
        ]

    def chronological_split(self, eval_start: Optional[int]) -> "EdgeDataset":
        """Re-split so training targets precede eval_start and refit scaling."""
        train, evaluate = split_masks(self.months, self.delta, eval_start)
        standardizer = fit_edge_standardizer(self.raw[train], self.layout)
        return EdgeDataset(
            layout=self.layout,
            raw=self.raw,
            y=self.y,
            pairs=self.pairs,
            months=self.months,
            delta=self.delta,
            tau=self.tau,
            train_mask=train,
            eval_mask=evaluate,
            eval_start=eval_start,
            standardizer=standardizer,
            X=apply_edge_standardizer(self.raw, standardizer, self.layout),
        )


def split_masks(
    months: np.ndarray, delta: int, eval_start: Optional[int]
) -> Tuple[np.ndarray, np.ndarray]:
    if eval_start is None:
        return np.ones(months.shape[0], dtype=bool), np.zeros(months.shape[0], dtype=bool)
    train = months + delta < eval_start
    evaluate = months >= eval_start
    if not train.any():
        raise RangeError(f"No training samples have targets before month {eval_start}")
    return train, evaluate


def fit_edge_standardizer(raw: np.ndarray, layout: EdgeFeatureLayout) -> Standardizer:
    """Standardizer over continuous columns; flags keep mean 0 and scale 1."""
    if raw.shape[0] == 0:
        raise EmptyDatasetError("No training samples to standardize")
    fitted = Standardizer.fit(raw)
    mask = layout.continuous_mask
    return Standardizer(
        mean=np.where(mask, fitted.mean, 0.0),
        scale=np.where(mask, fitted.scale, 1.0),
        zero_spread=np.where(mask, fitted.zero_spread, False),
    )


def apply_edge_standardizer(
    raw: np.ndarray, standardizer: Standardizer, layout: EdgeFeatureLayout
) -> np.ndarray:
    if raw.shape[1] != len(layout):
        raise DimensionError(f"Expected {len(layout)} features, got {raw.shape[1]}")
    out = standardizer.transform(raw)
    mask = layout.continuous_mask
    out[:, ~mask] = np.nan_to_num(raw[:, ~mask])
    return np.nan_to_num(out, nan=0.0)


def default_eval_start(
    eligible: Sequence[int], eval_fraction: float, delta: int
) -> Optional[int]:
    """First evaluation month so that about eval_fraction of months are held out."""
    if eval_fraction <= 0:
        return None
    n_eval = max(1, math.ceil(len(eligible) * eval_fraction))
    eval_start = eligible[-n_eval]
    if eligible[0] + delta >= eval_start:
        return None
    return eval_start


def sample_pairs(
    snapshots: Sequence[MobilitySnapshot], negative_ratio: float, seed: int
) -> np.ndarray:
    """Pairs active at least once plus a seeded sample of never-active pairs."""
    if negative_ratio < 0:
        raise ConfigurationError(f"negative_ratio must be >= 0, got {negative_ratio}")
    n = len(snapshots[0].port_ids)
    active = np.zeros((n, n), dtype=bool)
    for snap in snapshots:
        active |= snap.weights.toarray() > 0
    off_diagonal = ~np.eye(n, dtype=bool)
    active_pairs = np.argwhere(active & off_diagonal)
    inactive_pairs = np.argwhere(~active & off_diagonal)
    n_negative = min(len(inactive_pairs), int(round(negative_ratio * len(active_pairs))))
    rng = np.random.default_rng(seed)
    chosen = rng.choice(len(inactive_pairs), size=n_negative, replace=False)
    pairs = np.vstack([active_pairs, inactive_pairs[np.sort(chosen)]]).reshape(-1, 2)
    order = np.lexsort((pairs[:, 1], pairs[:, 0]))
    return pairs[order].astype(int)


def assemble_dataset(
    builder: FeatureBuilder,
    delta: int = 1,
    tau: float = 0.0,
    negative_ratio: float = 3.0,
    seed: int = 0,
    eval_fraction: float = 0.25,
    eval_start: Optional[int] = None,
) -> EdgeDataset:
    """One sample per (pair, month t) with a known outcome at t + delta."""
    if delta < 1:
        raise ConfigurationError(f"delta must be >= 1, got {delta}")
    eligible = [t for t in range(builder.start, builder.end + 1) if t + delta <= builder.end]
    if not eligible:
        raise RangeError(
            f"Horizon {delta} exceeds snapshot range {builder.start}..{builder.end}"
        )
    # Active pairs plus sampled negatives
    pairs = sample_pairs(builder.snapshots, negative_ratio, seed)
    if len(pairs) == 0:
        raise EmptyDatasetError("No port pairs to forecast (no voyages observed)")

    # Features at t, labels at t + delta
    blocks, labels, months = [], [], []
    for t in eligible:
        blocks.append(builder.rows(t, pairs[:, 0], pairs[:, 1]))
        future = builder.snapshots[t + delta - builder.start].weights.toarray()
        labels.append((future[pairs[:, 0], pairs[:, 1]] > tau).astype(int))
        months.append(np.full(len(pairs), t))
    raw = np.vstack(blocks)
    y = np.concatenate(labels)
    month_array = np.concatenate(months)
    pair_array = np.tile(pairs, (len(eligible), 1))

    # Chronological split, scaled on the training rows only
    if eval_start is None:
        eval_start = default_eval_start(eligible, eval_fraction, delta)
    train, evaluate = split_masks(month_array, delta, eval_start)
    standardizer = fit_edge_standardizer(raw[train], builder.layout)
    dataset = EdgeDataset(
        layout=builder.layout,
        raw=raw,
        y=y,
        pairs=pair_array,
        months=month_array,
        delta=delta,
        tau=tau,
        train_mask=train,
        eval_mask=evaluate,
        eval_start=eval_start,
        standardizer=standardizer,
        X=apply_edge_standardizer(raw, standardizer, builder.layout),
    )
    logger.info(
        f"Assembled {len(dataset)} samples over {len(pairs)} pairs and "
        f"{len(eligible)} months ({int(train.sum())} train, {int(evaluate.sum())} eval)"
    )
    return dataset


# Models


@dataclass
class LogisticModel:
    coef: np.ndarray
    intercept: float
    l2: float = 0.0
    learning_rate: float = 0.1
    epochs: int = 0
    final_loss: float = float("nan")
    loss_history: List[float] = field(default_factory=list, repr=False)

    @property
    def weights(self) -> np.ndarray:
        return np.concatenate([self.coef, [self.intercept]])

    @property
    def n_features(self) -> int:
        return int(self.coef.shape[0])


def _scores(X: np.ndarray, coef: np.ndarray, intercept: float) -> np.ndarray:
    # Row sums instead of a BLAS product keep results bitwise reproducible.
    return np.sum(X * coef, axis=1) + intercept


def log_loss_and_gradient(
    weights: np.ndarray, X: np.ndarray, y: np.ndarray, l2: float
) -> Tuple[float, np.ndarray]:
    """Mean log-loss plus l2/2 * |coef|^2 and its gradient (intercept last)."""
    coef, intercept = weights[:-1], weights[-1]
    z = _scores(X, coef, intercept)
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * np.sum(coef**2))
    residual = expit(z) - y
    grad_coef = np.sum(X * residual[:, None], axis=0) / X.shape[0] + l2 * coef
    grad_intercept = np.sum(residual) / X.shape[0]
    return loss, np.concatenate([grad_coef, [grad_intercept]])


def train_logistic(
    X: np.ndarray,
    y: np.ndarray,
    l2: float = 1e-3,
    learning_rate: float = 0.1,
    epochs: int = 500,
    seed: int = 0,
) -> LogisticModel:
    """Full-batch gradient descent on the regularized mean log-loss."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise DimensionError(f"Features {X.shape} do not match {y.shape[0]} labels")
    if X.shape[0] == 0:
        raise EmptyDatasetError("No training samples")
    if np.unique(y).size < 2:
        raise DegenerateLabelError("Training labels contain a single class")
    if l2 < 0 or learning_rate <= 0 or epochs < 0:
        raise ConfigurationError("Need l2 >= 0, learning_rate > 0 and epochs >= 0")

    rng = np.random.default_rng(seed)
    weights = np.concatenate([rng.normal(0.0, 0.01, X.shape[1]), [0.0]])
    history: List[float] = []
    for _ in range(epochs):
        loss, grad = log_loss_and_gradient(weights, X, y, l2)
        history.append(loss)
        weights = weights - learning_rate * grad
    final_loss, _ = log_loss_and_gradient(weights, X, y, l2)
    history.append(final_loss)
    logger.debug(f"Logistic l2={l2} trained {epochs} epochs, loss {final_loss:.6f}")
    return LogisticModel(
        coef=weights[:-1],
        intercept=float(weights[-1]),
        l2=l2,
        learning_rate=learning_rate,
        epochs=epochs,
        final_loss=final_loss,
        loss_history=history,
    )


def predict(model: LogisticModel, features: np.ndarray) -> np.ndarray:
    """Clipped sigmoid of the affine score."""
    X = np.atleast_2d(np.asarray(features, dtype=float))
    if X.shape[1] != model.n_features:
        raise DimensionError(
            f"Model expects {model.n_features} features, got {X.shape[1]}"
        )
    return np.clip(expit(_scores(X, model.coef, model.intercept)), PROBABILITY_FLOOR, PROBABILITY_CEILING)


@dataclass(frozen=True)
class EnsembleWeights:
    alphas: Tuple[float, ...]

    def __post_init__(self) -> None:
        alphas = tuple(float(a) for a in self.alphas)
        if not alphas:
            raise ConfigurationError("Ensemble needs at least one alpha")
        if any(a < 0 for a in alphas):
            raise ConfigurationError(f"Ensemble alphas must be >= 0, got {alphas}")
        if abs(sum(alphas) - 1.0) > 1e-9:
            raise ConfigurationError(f"Ensemble alphas must sum to 1, got {sum(alphas)}")
        object.__setattr__(self, "alphas", alphas)


def ensemble(
    predictions: Union[Sequence[np.ndarray], np.ndarray], alphas: EnsembleWeights
) -> np.ndarray:
    """Convex combination sum_m alpha_m * p_m."""
    stacked = np.asarray(predictions, dtype=float)
    if stacked.shape[0] != len(alphas.alphas):
        raise DimensionError(
            f"{stacked.shape[0]} member predictions for {len(alphas.alphas)} alphas"
        )
    weights = np.asarray(alphas.alphas).reshape((-1,) + (1,) * (stacked.ndim - 1))
    return np.sum(stacked * weights, axis=0)


@dataclass
class LinkEnsemble:
    """Logistic members with fixed alphas, plus everything needed to score new months."""

    members: List[LogisticModel]
    alphas: EnsembleWeights
    layout: EdgeFeatureLayout
    standardizer: Standardizer
    delta: int = 1
    tau: float = 0.0
    lags: int = 3
    recency_horizon: int = DEFAULT_RECENCY_HORIZON
    seed: int = 0
    metrics: Dict[str, Dict[str, float]] = field(default_factory=dict)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return ensemble([predict(m, X) for m in self.members], self.alphas)

    def predict_matrix(self, builder: FeatureBuilder, target_month: int) -> np.ndarray:
        """Dense predictions over all ordered pairs; diagonal held at the floor."""
        if builder.layout.columns != self.layout.columns:
            raise DimensionError("Feature layout differs from the trained model")
        t = target_month - self.delta
        n = builder.n_ports
        src, dst = np.nonzero(~np.eye(n, dtype=bool))
        raw = builder.rows(t, src, dst)
        X = apply_edge_standardizer(raw, self.standardizer, self.layout)
        Y = np.full((n, n), PROBABILITY_FLOOR)
        Y[src, dst] = self.predict(X)
        return Y

    def target_months(self, builder: FeatureBuilder) -> List[int]:
        return list(range(builder.start + self.delta, builder.end + self.delta + 1))


def train_ensemble(
    dataset: EdgeDataset,
    l2_values: Sequence[float] = (1e-3,),
    alphas: Sequence[float] = (1.0,),
    learning_rate: float = 0.1,
    epochs: int = 500,
    seed: int = 0,
    lags: int = 3,
    recency_horizon: int = DEFAULT_RECENCY_HORIZON,
) -> LinkEnsemble:
    weights = EnsembleWeights(tuple(alphas))
    if len(l2_values) != len(weights.alphas):
        raise ConfigurationError(
            f"{len(l2_values)} l2 values but {len(weights.alphas)} alphas"
        )
    members = [
        train_logistic(dataset.X_train, dataset.y_train, l2, learning_rate, epochs, seed + m)
        for m, l2 in enumerate(l2_values)
    ]
    model = LinkEnsemble(
        members=members,
        alphas=weights,
        layout=dataset.layout,
        standardizer=dataset.standardizer,
        delta=dataset.delta,
        tau=dataset.tau,
        lags=lags,
        recency_horizon=recency_horizon,
        seed=seed,
    )
    model.metrics["train"] = evaluate(model.predict(dataset.X_train), dataset.y_train)
    if dataset.eval_mask.any():
        try:
            model.metrics["eval"] = evaluate(model.predict(dataset.X_eval), dataset.y_eval)
        except DegenerateLabelError:
            logger.warning("Evaluation split holds a single class; metrics skipped")
    return model


# Metrics


def evaluate(predictions: np.ndarray, labels: np.ndarray) -> Dict[str, float]:
    """Log-loss, accuracy (positive when p > 0.5) and rank-statistic AUC."""
    p = np.clip(np.asarray(predictions, dtype=float), PROBABILITY_FLOOR, PROBABILITY_CEILING)
    y = np.asarray(labels, dtype=int)
    if p.shape != y.shape:
        raise DimensionError(f"{p.shape[0]} predictions for {y.shape[0]} labels")
    n_pos = int(y.sum())
    n_neg = int(y.shape[0] - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabelError("Evaluation labels contain a single class")
    log_loss = float(-np.mean(y * np.log(p) + (1 - y) * np.log(1 - p)))
    accuracy = float(np.mean((p > 0.5).astype(int) == y))
    ranks = rankdata(p, method="average")
    auc = float((ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))
    return {"log_loss": log_loss, "accuracy": accuracy, "auc": auc, "n": float(y.shape[0])}


def evaluate_model(
    model: Union[LogisticModel, LinkEnsemble], X: np.ndarray, y: np.ndarray
) -> Dict[str, float]:
    scores = model.predict(X) if isinstance(model, LinkEnsemble) else predict(model, X)
    return evaluate(scores, y)


# Persistence


class MemberDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    coef: List[float]
    intercept: float
    l2: float
    learning_rate: float
    epochs: int
    final_loss: float


class StandardizerDocument(BaseModel):
    mean: List[float]
    scale: List[float]
    zero_spread: List[bool]


class ModelDocument(BaseModel):
    """Versioned JSON form of a trained ensemble."""

    model_config = ConfigDict(extra="forbid")

    format_version: Literal[1] = MODEL_FORMAT_VERSION
    columns: List[str]
    continuous: List[bool]
    standardizer: StandardizerDocument
    members: List[MemberDocument]
    alphas: List[float]
    delta: int
    tau: float
    lags: int
    recency_horizon: int
    seed: int
    metrics: Dict[str, Dict[str, float]] = {}


def model_document(model: LinkEnsemble) -> ModelDocument:
    return ModelDocument(
        columns=list(model.layout.columns),
        continuous=list(model.layout.continuous),
        standardizer=StandardizerDocument(**model.standardizer.to_dict()),
        members=[
            MemberDocument(
                coef=m.coef.tolist(),
                intercept=m.intercept,
                l2=m.l2,
                learning_rate=m.learning_rate,
                epochs=m.epochs,
                final_loss=m.final_loss,
            )
            for m in model.members
        ],
        alphas=list(model.alphas.alphas),
        delta=model.delta,
        tau=model.tau,
        lags=model.lags,
        recency_horizon=model.recency_horizon,
        seed=model.seed,
        metrics=model.metrics,
    )


def save_model(model: LinkEnsemble, path: Path) -> Path:
    return save_json_file(model_document(model).model_dump(), path)


def load_model(path: Path) -> LinkEnsemble:
    try:
        document = ModelDocument.model_validate_json(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise StorageError("Model document not found", source=str(path))
    except ValidationError as e:
        raise StorageError(f"Invalid model document: {e.errors()[0]['msg']}", source=str(path))
    layout = EdgeFeatureLayout(tuple(document.columns), tuple(document.continuous))
    return LinkEnsemble(
        members=[
            LogisticModel(
                coef=np.array(m.coef),
                intercept=m.intercept,
                l2=m.l2,
                learning_rate=m.learning_rate,
                epochs=m.epochs,
                final_loss=m.final_loss,
            )
            for m in document.members
        ],
        alphas=EnsembleWeights(tuple(document.alphas)),
        layout=layout,
        standardizer=Standardizer.from_dict(document.standardizer.model_dump()),
        delta=document.delta,
        tau=document.tau,
        lags=document.lags,
        recency_horizon=document.recency_horizon,
        seed=document.seed,
        metrics=document.metrics,
    )


def prediction_frame(months: Sequence[int], matrices: Sequence[np.ndarray], port_ids: Sequence[str]) -> pd.DataFrame:
    """Long table month_index, origin, destination, probability (off-diagonal)."""
    records: List[Dict[str, Any]] = []
    n = len(port_ids)
    for month, Y in zip(months, matrices):
        for i in range(n):
            for j in range(n):
                if i != j:
                    records.append(
                        {
                            "month_index": month,
                            "origin": port_ids[i],
                            "destination": port_ids[j],
                            "probability": float(Y[i, j]),
                        }
                    )
    return pd.DataFrame.from_records(
        records, columns=["month_index", "origin", "destination", "probability"]
    )
