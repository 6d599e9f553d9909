"""Staged pipeline: climate -> cluster -> similarity -> ingest -> graph -> forecast -> risk -> report."""

import logging
import platform
import time
from importlib import metadata
from typing import Any, Callable, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel

from invasionrisk import __version__
from invasionrisk.core.ais import Voyage, ingest_voyages, read_ais
from invasionrisk.core.climate import (
    FeatureVector,
    PortRecord,
    Standardizer,
    apply_standardizer,
    build_feature_vectors,
    feature_layout,
    read_climate,
    read_port_registry,
    standardize,
)
from invasionrisk.core.clustering import ClusterLabeling, cluster
from invasionrisk.core.config import PipelineConfig, validate_inputs
from invasionrisk.core.forecast import (
    FeatureBuilder,
    assemble_dataset,
    read_exogenous,
    save_model,
    train_ensemble,
)
from invasionrisk.core.mobility import MobilitySnapshot, aggregate_snapshots, build_snapshots
from invasionrisk.core.report import emit_report
from invasionrisk.core.risk import compute_exposure
from invasionrisk.core.similarity import (
    KernelMatrix,
    PortMatrix,
    SimilarityMatrix,
    choose_similarity_source,
    delta_similarity,
    kernel,
    similarity_matrix,
    zero_delta,
)
from invasionrisk.core.storage import ArtifactStore
from invasionrisk.utils.exceptions import (
    ConfigurationError,
    EmptyDatasetError,
    InvasionRiskError,
    StageError,
)
from invasionrisk.utils.helpers import file_sha256, save_json_file

logger = logging.getLogger(__name__)

STAGES: Tuple[str, ...] = (
    "climate",
    "cluster",
    "similarity",
    "ingest",
    "graph",
    "forecast",
    "risk",
    "report",
)

PRIMARY_ARTIFACTS: Dict[str, str] = {
    "climate": "features.csv",
    "cluster": "clusters.csv",
    "similarity": "kernel.csv",
    "ingest": "voyages.csv",
    "graph": "snapshots.csv",
    "forecast": "predictions.csv",
    "risk": "exposure.csv",
    "report": "report.json",
}

STAGE_INPUTS: Dict[str, Tuple[str, ...]] = {
    "climate": ("ports", "climate"),
    "ingest": ("ports", "ais"),
    "forecast": ("ports",),
}

TRACKED_PACKAGES = ("numpy", "scipy", "pandas", "pydantic", "click", "rich", "tabulate", "openpyxl")

StageCallback = Callable[[str], None]


class RunManifest(BaseModel):
    """What ran, on which inputs, with which versions and how long it took."""

    package_version: str
    status: Literal["ok", "failed"] = "ok"
    failed_stage: Optional[str] = None
    stages: List[str]
    config: Dict[str, Any]
    inputs: Dict[str, str]
    versions: Dict[str, str]
    timings: Dict[str, float] = {}
    counts: Dict[str, int] = {}
    ingest: Dict[str, int] = {}


def package_versions() -> Dict[str, str]:
    versions = {"python": platform.python_version(), "invasionrisk": __version__}
    for name in TRACKED_PACKAGES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = "unknown"
    return versions


def input_hashes(config: PipelineConfig) -> Dict[str, str]:
    return {name: file_sha256(path) for name, path in sorted(config.inputs.declared().items())}


def select_stages(from_stage: Optional[str] = None, to_stage: Optional[str] = None) -> List[str]:
    """Contiguous stage range; unknown names are configuration errors."""
    for name in (from_stage, to_stage):
        if name is not None and name not in STAGES:
            raise ConfigurationError(f"Unknown stage {name!r}; choose from {', '.join(STAGES)}")
    lo = STAGES.index(from_stage) if from_stage else 0
    hi = STAGES.index(to_stage) if to_stage else len(STAGES) - 1
    if hi < lo:
        raise ConfigurationError(f"Stage {to_stage!r} comes before {from_stage!r}")
    return list(STAGES[lo : hi + 1])


class Pipeline:
    """Runs stages in order; anything a stage needs from an earlier stage that
    did not run in this invocation is reloaded from the artifact store."""

    def __init__(
        self,
        config: PipelineConfig,
        store: Optional[ArtifactStore] = None,
        xlsx: bool = False,
    ):
        self.config = config
        self.store = store or ArtifactStore(config.output_dir)
        self.xlsx = xlsx
        self.counts: Dict[str, int] = {}
        self.ingest_stats: Dict[str, int] = {}
        self._registry: Optional[List[PortRecord]] = None
        self._features: Optional[List[FeatureVector]] = None
        self._standardized: Optional[List[FeatureVector]] = None
        self._standardizer: Optional[Standardizer] = None
        self._labeling: Optional[ClusterLabeling] = None
        self._similarity: Optional[SimilarityMatrix] = None
        self._delta: Optional[PortMatrix] = None
        self._kernel: Optional[KernelMatrix] = None
        self._voyages: Optional[List[Voyage]] = None
        self._snapshots: Optional[List[MobilitySnapshot]] = None
        self._predictions: Optional[Dict[int, Any]] = None

    # Stage parameters (hashed into artifact headers)

    def stage_params(self, stage: str) -> Dict[str, Any]:
        c = self.config
        return {
            "climate": {},
            "cluster": c.clustering.model_dump(),
            "similarity": {
                **c.kernel.model_dump(),
                "scenario": c.inputs.scenario_climate is not None,
            },
            "ingest": {**c.calls.model_dump(), "ais_format": c.inputs.ais_format},
            "graph": c.graph.model_dump(),
            "forecast": {**c.forecast.model_dump(), "seed": c.seed},
            "risk": c.risk.model_dump(mode="json"),
            "report": {"top_n": c.risk.top_n},
        }[stage]

    # Lazily loaded state

    @property
    def registry(self) -> List[PortRecord]:
        if self._registry is None:
            path = self.config.inputs.ports
            if path is None:
                raise ConfigurationError("Input 'ports' is not configured")
            self._registry = read_port_registry(path)
        return self._registry

    def _load_climate(self) -> None:
        features, _, standardizer = self.store.read_features()
        self._features = features
        self._standardizer = standardizer
        self._standardized = apply_standardizer(features, standardizer)

    @property
    def standardized(self) -> List[FeatureVector]:
        if self._standardized is None:
            self._load_climate()
        return self._standardized

    @property
    def standardizer(self) -> Standardizer:
        if self._standardizer is None:
            self._load_climate()
        return self._standardizer

    @property
    def labeling(self) -> ClusterLabeling:
        if self._labeling is None:
            self._labeling = self.store.read_clusters()
        return self._labeling

    @property
    def similarity(self) -> SimilarityMatrix:
        if self._similarity is None:
            self._similarity = self.store.read_matrix("similarity.csv", SimilarityMatrix)
        return self._similarity

    @property
    def delta(self) -> PortMatrix:
        if self._delta is None:
            if self.config.inputs.scenario_climate is not None:
                self._delta = self.store.read_matrix("delta_similarity.csv")
            else:
                self._delta = zero_delta(self.similarity)
        return self._delta

    @property
    def kernel(self) -> KernelMatrix:
        if self._kernel is None:
            self._kernel = self.store.read_matrix("kernel.csv", KernelMatrix)
        return self._kernel

    @property
    def voyages(self) -> List[Voyage]:
        if self._voyages is None:
            self._voyages = self.store.read_voyages()
        return self._voyages

    @property
    def snapshots(self) -> List[MobilitySnapshot]:
        if self._snapshots is None:
            self._snapshots = self.store.read_snapshots(
                self.similarity.port_ids, self.config.graph.aggregate_months
            )
        return self._snapshots

    @property
    def predictions(self) -> Dict[int, Any]:
        if self._predictions is None:
            self._predictions = self.store.read_predictions(self.kernel.port_ids)
        return self._predictions

    # Stages

    def run_climate(self) -> None:
        records = read_climate(self.config.inputs.climate, self.registry)
        features = build_feature_vectors(records, self.config.threads)
        standardized, standardizer = standardize(features)
        self._features, self._standardized, self._standardizer = features, standardized, standardizer
        self.store.write_features(
            features, feature_layout(records[0].variables), standardizer, self.stage_params("climate")
        )
        self.counts["ports"] = len(records)

    def run_cluster(self) -> None:
        self._labeling = cluster(self.standardized, self.config.clustering.to_params())
        self.store.write_clusters(self._labeling, self.stage_params("cluster"))
        self.counts["clusters"] = self._labeling.n_clusters

    def run_similarity(self) -> None:
        params = self.stage_params("similarity")
        base = similarity_matrix(self.standardized)
        scenario: Optional[SimilarityMatrix] = None
        if self.config.inputs.scenario_climate is not None:
            records = read_climate(self.config.inputs.scenario_climate, self.registry)
            raw = build_feature_vectors(records, self.config.threads)
            scenario = similarity_matrix(apply_standardizer(raw, self.standardizer))
            self._delta = delta_similarity(base, scenario)
            self.store.write_matrix("similarity_scenario.csv", scenario, "similarity", params)
            self.store.write_matrix("delta_similarity.csv", self._delta, "similarity", params)
        else:
            self._delta = zero_delta(base)
        self._similarity = base
        source = choose_similarity_source(self.config.kernel.similarity_source, base, scenario)
        self._kernel = kernel(source, self.labeling, self.config.kernel.to_params())
        self.store.write_matrix("similarity.csv", base, "similarity", params)
        self.store.write_matrix("kernel.csv", self._kernel, "similarity", params)

    def run_ingest(self) -> None:
        params = self.stage_params("ingest")
        ais = read_ais(self.config.inputs.ais, self.config.inputs.ais_format)
        calls, voyages = ingest_voyages(
            ais.messages, self.registry, self.config.calls.to_params(), self.config.threads
        )
        self._voyages = voyages
        self.store.write_port_calls(calls, params)
        self.store.write_voyages(voyages, params)
        self.store.write_vessels(ais.vessels, params)
        self.ingest_stats = ais.stats.as_dict()
        self.counts.update(
            messages_decoded=ais.stats.decoded,
            messages_skipped=ais.stats.skipped,
            calls=len(calls),
            voyages=len(voyages),
        )
        logger.info(f"Ingest statistics: {self.ingest_stats}")

    def run_graph(self) -> None:
        if not self.voyages:
            raise EmptyDatasetError("No voyages detected; the mobility graph is empty")
        snapshots = build_snapshots(self.voyages, self.similarity.port_ids)
        snapshots = aggregate_snapshots(snapshots, self.config.graph.aggregate_months)
        self._snapshots = snapshots
        self.store.write_snapshots(snapshots, self.stage_params("graph"))
        self.counts["months"] = len(snapshots)

    def run_forecast(self) -> None:
        fc = self.config.forecast
        exogenous = None
        if self.config.inputs.exogenous is not None:
            exogenous = read_exogenous(self.config.inputs.exogenous, self.similarity.port_ids)
        builder = FeatureBuilder(
            self.snapshots,
            self.similarity,
            self.delta,
            self.labeling,
            self.registry,
            exogenous,
            fc.lags,
            fc.recency_horizon,
        )
        dataset = assemble_dataset(
            builder,
            delta=fc.delta,
            tau=fc.tau,
            negative_ratio=fc.negative_ratio,
            seed=self.config.seed,
            eval_fraction=fc.eval_fraction,
        )
        model = train_ensemble(
            dataset,
            fc.l2_values,
            fc.alphas,
            fc.learning_rate,
            fc.epochs,
            self.config.seed,
            fc.lags,
            fc.recency_horizon,
        )
        self._predictions = {m: model.predict_matrix(builder, m) for m in model.target_months(builder)}
        save_model(model, self.store.path("model.json"))
        self.store.write_predictions(self._predictions, builder.port_ids, self.stage_params("forecast"))
        self.counts["samples"] = len(dataset)
        for split, values in sorted(model.metrics.items()):
            logger.info(
                f"Forecast {split}: log-loss {values['log_loss']:.4f}, "
                f"accuracy {values['accuracy']:.3f}, AUC {values['auc']:.3f}"
            )

    def run_risk(self) -> None:
        risk = self.config.risk
        report = compute_exposure(
            self.predictions,
            self.kernel,
            risk.to_params(),
            self.voyages,
            risk.rules(),
            risk.target_reduction,
        )
        params = self.stage_params("risk")
        self.store.write_exposure(report, params)
        self.store.write_triplets(report.triplets, params)
        self.store.write_shipments(report.shipments, params)
        if report.what_if:
            self.store.write_json("what_if.json", {"rules": risk.model_dump(mode="json")["what_if"], "months": report.what_if})
        self.counts["triplets"] = len(report.triplets)

    def run_report(self) -> None:
        emit_report(self.store, self.config, xlsx=self.xlsx)

    # Driver

    def run(
        self,
        from_stage: Optional[str] = None,
        to_stage: Optional[str] = None,
        on_stage: Optional[StageCallback] = None,
    ) -> RunManifest:
        stages = select_stages(from_stage, to_stage)
        # Check inputs before any stage runs
        required = tuple(sorted({name for s in stages for name in STAGE_INPUTS.get(s, ())}))
        validate_inputs(self.config, required)

        manifest = RunManifest(
            package_version=__version__,
            stages=stages,
            config=self.config.snapshot(),
            inputs=input_hashes(self.config),
            versions=package_versions(),
        )
        # Run stages in order; the manifest is written even on failure
        current = None
        try:
            for current in stages:
                if on_stage:
                    on_stage(current)
                logger.info(f"Stage {current}")
                started = time.perf_counter()
                try:
                    getattr(self, f"run_{current}")()
                except InvasionRiskError as e:
                    raise StageError(current, e) from e
                except (OSError, ValueError, KeyError) as e:
                    raise StageError(current, e) from e
                manifest.timings[current] = round(time.perf_counter() - started, 6)
        except StageError:
            manifest.status = "failed"
            manifest.failed_stage = current
            raise
        finally:
            manifest.counts = dict(sorted(self.counts.items()))
            manifest.ingest = self.ingest_stats
            save_json_file(manifest.model_dump(mode="json"), self.store.manifest_path)
        return manifest


def run_pipeline(
    config: PipelineConfig,
    from_stage: Optional[str] = None,
    to_stage: Optional[str] = None,
    on_stage: Optional[StageCallback] = None,
    xlsx: bool = False,
) -> RunManifest:
    """Run the stage range and write the manifest exactly once."""
    return Pipeline(config, xlsx=xlsx).run(from_stage, to_stage, on_stage)
