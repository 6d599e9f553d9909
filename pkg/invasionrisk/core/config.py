"""Pipeline configuration: one JSON document, validated before any data is read."""

from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from invasionrisk.core.ais import CallParams
from invasionrisk.core.clustering import ClusterParams
from invasionrisk.core.risk import RiskParams, WhatIfRule
from invasionrisk.core.similarity import KernelParams
from invasionrisk.utils.exceptions import ConfigurationError
from invasionrisk.utils.helpers import load_config_file


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class InputsConfig(_Section):
    ports: Optional[Path] = None
    climate: Optional[Path] = None
    scenario_climate: Optional[Path] = None
    ais: Optional[Path] = None
    ais_format: Literal["auto", "nmea", "csv"] = "auto"
    exogenous: Optional[Path] = None

    def declared(self) -> Dict[str, Path]:
        names = ("ports", "climate", "scenario_climate", "ais", "exogenous")
        return {n: getattr(self, n) for n in names if getattr(self, n) is not None}


class ClusteringConfig(_Section):
    min_cluster_size: int = Field(5, ge=2)
    min_samples: int = Field(5, ge=1)

    def to_params(self) -> ClusterParams:
        return ClusterParams(self.min_cluster_size, self.min_samples)


class KernelConfig(_Section):
    eta: float = Field(1.0, gt=0)
    beta: float = Field(0.5, ge=0)
    clamp: bool = True
    similarity_source: Literal["auto", "base", "scenario"] = "auto"

    def to_params(self) -> KernelParams:
        return KernelParams(self.eta, self.beta, self.clamp)


class CallsConfig(_Section):
    radius_km: float = Field(10.0, gt=0)
    sog_max_knots: float = Field(1.0, gt=0)
    min_dwell_hours: float = Field(2.0, gt=0)
    gap_split_hours: float = Field(6.0, gt=0)

    def to_params(self) -> CallParams:
        return CallParams(**self.model_dump())


class GraphConfig(_Section):
    aggregate_months: int = Field(1, ge=1)


class ForecastConfig(_Section):
    tau: float = Field(0.0, ge=0)
    delta: int = Field(1, ge=1)
    lags: int = Field(3, ge=1)
    recency_horizon: int = Field(24, ge=1)
    negative_ratio: float = Field(3.0, ge=0)
    l2_values: List[float] = Field(default_factory=lambda: [1e-3], min_length=1)
    alphas: List[float] = Field(default_factory=lambda: [1.0], min_length=1)
    learning_rate: float = Field(0.1, gt=0)
    epochs: int = Field(500, ge=1)
    eval_fraction: float = Field(0.25, ge=0, lt=1)

    @model_validator(mode="after")
    def _check_ensemble(self) -> "ForecastConfig":
        if any(v < 0 for v in self.l2_values):
            raise ValueError("l2_values must be >= 0")
        if len(self.alphas) != len(self.l2_values):
            raise ValueError("alphas must have one entry per l2 value")
        if any(a < 0 for a in self.alphas):
            raise ValueError("alphas must be >= 0")
        if abs(sum(self.alphas) - 1.0) > 1e-9:
            raise ValueError("alphas must sum to 1")
        return self


class WhatIfConfig(_Section):
    name: str = ""
    multiplier: float = Field(ge=0, le=1)
    edges: List[Tuple[str, str]] = Field(default_factory=list)
    inbound: List[str] = Field(default_factory=list)
    outbound: List[str] = Field(default_factory=list)

    def to_rule(self) -> WhatIfRule:
        return WhatIfRule(
            multiplier=self.multiplier,
            edges=tuple(tuple(e) for e in self.edges),
            inbound=tuple(self.inbound),
            outbound=tuple(self.outbound),
            name=self.name,
        )


class RiskConfig(_Section):
    gamma: float = Field(0.6, gt=0, le=1)
    hops: int = Field(3, ge=1)
    path_hops: int = Field(3, ge=1)
    residence_reference_hours: float = Field(48.0, gt=0)
    top_n: int = Field(20, ge=1)
    what_if: List[WhatIfConfig] = Field(default_factory=list)
    target_reduction: Optional[float] = Field(None, ge=0, le=1)

    def to_params(self) -> RiskParams:
        return RiskParams(
            self.gamma, self.hops, self.path_hops, self.residence_reference_hours
        )

    def rules(self) -> List[WhatIfRule]:
        return [w.to_rule() for w in self.what_if]


class PipelineConfig(_Section):
    """Complete run configuration; every key has a default."""

    inputs: InputsConfig = Field(default_factory=InputsConfig)
    clustering: ClusteringConfig = Field(default_factory=ClusteringConfig)
    kernel: KernelConfig = Field(default_factory=KernelConfig)
    calls: CallsConfig = Field(default_factory=CallsConfig)
    graph: GraphConfig = Field(default_factory=GraphConfig)
    forecast: ForecastConfig = Field(default_factory=ForecastConfig)
    risk: RiskConfig = Field(default_factory=RiskConfig)
    seed: int = Field(0, ge=0, lt=2**64)
    threads: int = Field(1, ge=1)
    output_dir: Path = Path("out")

    def snapshot(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")


def build_config(
    data: Optional[Dict[str, Any]] = None,
    base_dir: Optional[Path] = None,
    **overrides: Any,
) -> PipelineConfig:
    """Validate a config mapping; non-None overrides win over file values.

    Relative input paths, and output_dir unless overridden, resolve against
    base_dir (the config file's folder).
    """
    merged: Dict[str, Any] = dict(data or {})
    for key, value in overrides.items():
        if value is not None:
            merged[key] = value
    try:
        config = PipelineConfig.model_validate(merged)
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(p) for p in first["loc"])
        raise ConfigurationError(f"Invalid configuration at '{where}': {first['msg']}")

    if base_dir is not None:
        resolved = {
            name: path if path.is_absolute() else base_dir / path
            for name, path in config.inputs.declared().items()
        }
        update: Dict[str, Any] = {"inputs": config.inputs.model_copy(update=resolved)}
        if overrides.get("output_dir") is None and not config.output_dir.is_absolute():
            update["output_dir"] = base_dir / config.output_dir
        config = config.model_copy(update=update)
    return config


def load_config(path: Optional[Path] = None, **overrides: Any) -> PipelineConfig:
    """Config file (if any) plus command-line overrides."""
    if path is None:
        return build_config(None, None, **overrides)
    data = load_config_file(str(path))
    return build_config(data, Path(path).parent, **overrides)


def validate_inputs(config: PipelineConfig, required: Tuple[str, ...] = ()) -> None:
    """Every declared input exists, and every required one is declared."""
    declared = config.inputs.declared()
    for name in required:
        if name not in declared:
            raise ConfigurationError(f"Input '{name}' is not configured")
    for name, path in declared.items():
        if not path.is_file():
            raise ConfigurationError(f"Input '{name}' not found", source=str(path))
