"""Monthly climate ingestion, hemisphere phase alignment and feature vectors."""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from invasionrisk.utils.exceptions import (
    DataIntegrityError,
    DimensionError,
    EmptyDatasetError,
    MalformedSeriesError,
    RegistryError,
)

logger = logging.getLogger(__name__)

MONTHS = 12
SOUTHERN_SHIFT = 6
FEATURE_NAMES = ("mean", "amplitude", "phase", "variance", "min", "max")

# Below this magnitude a first harmonic is treated as absent.
HARMONIC_TOLERANCE = 1e-12

REGISTRY_COLUMNS = ("port_id", "name", "latitude", "longitude", "capacity")
CLIMATE_COLUMNS = ("port_id", "variable", "month", "value")


@dataclass(frozen=True)
class PortRecord:
    """Port identity, position, capacity and monthly climate series."""

    port_id: str
    name: str
    latitude: float
    longitude: float
    capacity: float = 1.0
    series: Mapping[str, Tuple[float, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.port_id:
            raise DataIntegrityError("port_id must be a non-empty token")
        if not -90.0 <= self.latitude <= 90.0:
            raise DataIntegrityError(
                f"Latitude {self.latitude} of port {self.port_id} outside [-90, 90]"
            )
        if not -180.0 <= self.longitude < 180.0:
            raise DataIntegrityError(
                f"Longitude {self.longitude} of port {self.port_id} outside [-180, 180)"
            )
        if self.capacity < 0:
            raise DataIntegrityError(f"Negative capacity for port {self.port_id}")
        for variable, values in self.series.items():
            if len(values) != MONTHS:
                raise MalformedSeriesError(
                    f"Series {variable!r} of port {self.port_id} has "
                    f"{len(values)} entries, expected {MONTHS}"
                )

    @property
    def variables(self) -> Tuple[str, ...]:
        return tuple(sorted(self.series))

    def with_series(self, series: Mapping[str, Sequence[float]]) -> "PortRecord":
        """Copy of this port carrying a different climate."""
        return PortRecord(
            port_id=self.port_id,
            name=self.name,
            latitude=self.latitude,
            longitude=self.longitude,
            capacity=self.capacity,
            series={v: tuple(float(x) for x in s) for v, s in series.items()},
        )


@dataclass(frozen=True)
class FeatureVector:
    """Per-port summary in the fixed layout of ``feature_layout``."""

    port_id: str
    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))


@dataclass(frozen=True)
class Standardizer:
    """Per-dimension population mean and scale.

    Dimensions with zero spread keep a fallback scale of 1 and are mapped to
    zero when a value equals the stored mean.
    """

    mean: np.ndarray
    scale: np.ndarray
    zero_spread: np.ndarray

    @classmethod
    def fit(cls, matrix: np.ndarray) -> "Standardizer":
        matrix = np.asarray(matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] == 0:
            raise EmptyDatasetError("Cannot fit a standardizer on an empty dataset")
        mean = np.nanmean(matrix, axis=0)
        std = np.nanstd(matrix, axis=0)
        mean = np.where(np.isnan(mean), 0.0, mean)
        std = np.where(np.isnan(std), 0.0, std)
        zero_spread = std <= HARMONIC_TOLERANCE * np.maximum(1.0, np.abs(mean))
        scale = np.where(zero_spread, 1.0, std)
        return cls(mean=mean, scale=scale, zero_spread=zero_spread)

    def transform(self, matrix: np.ndarray) -> np.ndarray:
        matrix = np.asarray(matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[1] != self.mean.shape[0]:
            raise DimensionError(
                f"Expected {self.mean.shape[0]} columns, got shape {matrix.shape}"
            )
        centered = matrix - self.mean
        out = centered / self.scale
        flat = np.isclose(matrix, self.mean, rtol=1e-9, atol=HARMONIC_TOLERANCE)
        out[:, self.zero_spread] = np.where(
            flat[:, self.zero_spread], 0.0, centered[:, self.zero_spread]
        )
        return out

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mean": self.mean.tolist(),
            "scale": self.scale.tolist(),
            "zero_spread": self.zero_spread.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Standardizer":
        return cls(
            mean=np.asarray(data["mean"], dtype=float),
            scale=np.asarray(data["scale"], dtype=float),
            zero_spread=np.asarray(data["zero_spread"], dtype=bool),
        )


def phase_shift(latitude: float) -> int:
    """Months to shift a port's series: 6 south of the equator, else 0."""
    return SOUTHERN_SHIFT if latitude < 0 else 0


def shift_series(series: Sequence[float], delta: int) -> Tuple[float, ...]:
    """Series re-indexed so that output[t'] = series[(t' + delta) mod 12]."""
    if len(series) != MONTHS:
        raise MalformedSeriesError(
            f"Series has {len(series)} entries, expected {MONTHS}"
        )
    values = tuple(float(v) for v in series)
    d = delta % MONTHS
    return values[d:] + values[:d]


def align_phase(series: Sequence[float], latitude: float) -> Tuple[float, ...]:
    """Shift a monthly series to the common northern seasonal anchor."""
    if not -90.0 <= latitude <= 90.0:
        raise MalformedSeriesError(f"Latitude {latitude} outside [-90, 90]")
    return shift_series(series, phase_shift(latitude))


def align_record(record: PortRecord) -> Dict[str, Tuple[float, ...]]:
    return {v: align_phase(s, record.latitude) for v, s in record.series.items()}


def feature_layout(variables: Sequence[str]) -> List[str]:
    """Column names of a feature vector: variables sorted, features in fixed order."""
    return [f"{v}_{name}" for v in sorted(variables) for name in FEATURE_NAMES]


def _harmonic(values: np.ndarray) -> Tuple[float, float]:
    # c1 = sum_t x_t exp(+2*pi*i*t/12): phase is the month-angle of the peak
    c1 = np.conj(np.fft.fft(values)[1])
    amplitude = 2.0 * abs(c1) / MONTHS
    if amplitude <= HARMONIC_TOLERANCE * max(1.0, float(np.max(np.abs(values)))):
        return 0.0, 0.0
    phase = float(np.angle(c1)) % (2.0 * np.pi)
    if np.isclose(phase, 2.0 * np.pi, rtol=0.0, atol=HARMONIC_TOLERANCE):
        phase = 0.0
    return float(amplitude), phase


def extract_features(
    aligned_series: Mapping[str, Sequence[float]],
    port_id: str = "",
    variables: Optional[Sequence[str]] = None,
) -> FeatureVector:
    """Summarize aligned series as mean, amplitude, phase, variance, min, max."""
    names = sorted(variables) if variables is not None else sorted(aligned_series)
    if not names:
        raise MalformedSeriesError(f"Port {port_id!r} has no climate variables")

    values: List[float] = []
    for variable in names:
        if variable not in aligned_series:
            raise MalformedSeriesError(
                f"Port {port_id!r} is missing variable {variable!r}"
            )
        series = np.asarray(aligned_series[variable], dtype=float)
        if series.shape != (MONTHS,):
            raise MalformedSeriesError(
                f"Series {variable!r} of port {port_id!r} has "
                f"{series.size} entries, expected {MONTHS}"
            )
        if not np.all(np.isfinite(series)):
            raise MalformedSeriesError(
                f"Series {variable!r} of port {port_id!r} has non-finite values"
            )
        amplitude, phase = _harmonic(series)
        mean = float(np.mean(series))
        low = float(np.min(series))
        high = float(np.max(series))
        values.extend(
            [
                min(max(mean, low), high),
                amplitude,
                phase,
                float(np.var(series)),
                low,
                high,
            ]
        )
    return FeatureVector(port_id=port_id, values=np.array(values))


def build_feature_vectors(
    records: Sequence[PortRecord], threads: int = 1
) -> List[FeatureVector]:
    """Aligned feature vectors for every port, in input order."""
    if not records:
        raise EmptyDatasetError("No ports to extract features from")
    variables = records[0].variables

    def _one(record: PortRecord) -> FeatureVector:
        return extract_features(align_record(record), record.port_id, variables)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        return list(pool.map(_one, records))


def feature_matrix(features: Sequence[FeatureVector]) -> np.ndarray:
    if not features:
        raise EmptyDatasetError("No feature vectors")
    lengths = {f.values.shape[0] for f in features}
    if len(lengths) != 1:
        raise DimensionError(f"Inconsistent feature lengths: {sorted(lengths)}")
    return np.vstack([f.values for f in features])


def standardize(
    features: Sequence[FeatureVector],
) -> Tuple[List[FeatureVector], Standardizer]:
    """Zero-mean, unit-variance features over the port population."""
    matrix = feature_matrix(features)
    standardizer = Standardizer.fit(matrix)
    return apply_standardizer(features, standardizer), standardizer


def apply_standardizer(
    features: Sequence[FeatureVector], standardizer: Standardizer
) -> List[FeatureVector]:
    scaled = standardizer.transform(feature_matrix(features))
    return [FeatureVector(f.port_id, row) for f, row in zip(features, scaled)]


def env_distance(a: Sequence[float], b: Sequence[float]) -> float:
    """Euclidean distance between two feature vectors."""
    va = np.asarray(a, dtype=float)
    vb = np.asarray(b, dtype=float)
    if va.shape != vb.shape:
        raise DimensionError(f"Vector shapes differ: {va.shape} vs {vb.shape}")
    return float(np.sqrt(np.sum((va - vb) ** 2)))


def read_port_registry(path: Path) -> List[PortRecord]:
    """Read the port registry CSV (series are attached by ``read_climate``)."""
    frame = _read_csv(path, REGISTRY_COLUMNS, dtype={"port_id": str, "name": str})
    records: List[PortRecord] = []
    seen: Dict[str, int] = {}
    for offset, row in enumerate(frame.itertuples(index=False)):
        line = offset + 2
        port_id = str(row.port_id).strip()
        if port_id in seen:
            raise DataIntegrityError(
                f"Duplicate port_id {port_id!r} (first on line {seen[port_id]})",
                source=str(path),
                line=line,
            )
        seen[port_id] = line
        capacity = 1.0 if pd.isna(row.capacity) else float(row.capacity)
        try:
            records.append(
                PortRecord(
                    port_id=port_id,
                    name=str(row.name),
                    latitude=float(row.latitude),
                    longitude=float(row.longitude),
                    capacity=capacity,
                )
            )
        except (ValueError, DataIntegrityError) as e:
            raise DataIntegrityError(str(e), source=str(path), line=line)
    if not records:
        raise EmptyDatasetError("Port registry is empty", source=str(path))
    logger.info(f"Read {len(records)} ports from {path}")
    return records


def read_climate(path: Path, registry: Sequence[PortRecord]) -> List[PortRecord]:
    """Attach monthly climate series from a long-format CSV to registry ports."""
    frame = _read_csv(path, CLIMATE_COLUMNS, dtype={"port_id": str, "variable": str})
    known = {r.port_id: r for r in registry}
    cells: Dict[str, Dict[str, Dict[int, float]]] = {}

    for offset, row in enumerate(frame.itertuples(index=False)):
        line = offset + 2
        port_id = str(row.port_id).strip()
        variable = str(row.variable).strip()
        if port_id not in known:
            raise RegistryError(
                f"Unknown port_id {port_id!r}", source=str(path), line=line
            )
        try:
            month = int(row.month)
            value = float(row.value)
        except (TypeError, ValueError):
            raise MalformedSeriesError(
                "Non-numeric month or value", source=str(path), line=line
            )
        if not 0 <= month < MONTHS or float(row.month) != month:
            raise MalformedSeriesError(
                f"Month {row.month} outside 0..11", source=str(path), line=line
            )
        if not np.isfinite(value):
            raise MalformedSeriesError(
                "Missing or non-finite value", source=str(path), line=line
            )
        slot = cells.setdefault(port_id, {}).setdefault(variable, {})
        if month in slot:
            raise DataIntegrityError(
                f"Duplicate row for {port_id}/{variable}/month {month}",
                source=str(path),
                line=line,
            )
        slot[month] = value

    expected: Optional[Tuple[str, ...]] = None
    records: List[PortRecord] = []
    for port in registry:
        if port.port_id not in cells:
            raise MalformedSeriesError(
                f"No climate rows for port {port.port_id!r}", source=str(path)
            )
        series: Dict[str, Tuple[float, ...]] = {}
        for variable, months in cells[port.port_id].items():
            missing = [m for m in range(MONTHS) if m not in months]
            if missing:
                raise MalformedSeriesError(
                    f"Port {port.port_id!r} variable {variable!r} misses months {missing}",
                    source=str(path),
                )
            series[variable] = tuple(months[m] for m in range(MONTHS))
        variables = tuple(sorted(series))
        if expected is None:
            expected = variables
        elif variables != expected:
            raise MalformedSeriesError(
                f"Port {port.port_id!r} has variables {list(variables)}, "
                f"expected {list(expected)}",
                source=str(path),
            )
        records.append(port.with_series(series))

    logger.info(
        f"Read climate for {len(records)} ports, variables {list(expected or ())}"
    )
    return records


def _read_csv(path: Path, columns: Sequence[str], dtype: Dict[str, Any]) -> pd.DataFrame:
    try:
        frame = pd.read_csv(path, dtype=dtype, encoding="utf-8", comment="#")
    except FileNotFoundError:
        raise MalformedSeriesError("File not found", source=str(path))
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise MalformedSeriesError(f"Unreadable CSV: {e}", source=str(path))
    except pd.errors.EmptyDataError:
        raise EmptyDatasetError("CSV file is empty", source=str(path))
    frame.columns = [str(c).strip() for c in frame.columns]
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise MalformedSeriesError(
            f"Missing columns {missing} in header", source=str(path), line=1
        )
    return frame[list(columns)]
