"""Local artifact storage for pipeline stages."""

import json
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import scipy.sparse as sp

from invasionrisk.core.ais import PortCall, VesselInfo, Voyage
from invasionrisk.core.climate import FeatureVector, Standardizer
from invasionrisk.core.clustering import NOISE, ClusterLabeling
from invasionrisk.core.forecast import PROBABILITY_FLOOR, prediction_frame
from invasionrisk.core.mobility import MobilitySnapshot
from invasionrisk.core.risk import ExposureReport, RankedTriplet, ShipmentScore
from invasionrisk.core.similarity import PortMatrix
from invasionrisk.utils.exceptions import IncompleteRunError, StorageError
from invasionrisk.utils.helpers import format_timestamp, params_hash, save_json_file

FLOAT_FORMAT = "%.12g"
ARTIFACTS_DIR = "artifacts"
REPORTS_DIR = "reports"
MANIFEST_NAME = "manifest.json"


class ArtifactStore:
    """Stage artifacts under <out>/artifacts, reports under <out>/reports."""

    def __init__(self, base_path: Path):
        self.base_path = Path(base_path)
        self.artifacts_dir = self.base_path / ARTIFACTS_DIR
        self.reports_dir = self.base_path / REPORTS_DIR
        try:
            self.artifacts_dir.mkdir(parents=True, exist_ok=True)
            self.reports_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise StorageError(f"Cannot create output directory: {e}", source=str(base_path))

    @property
    def manifest_path(self) -> Path:
        return self.base_path / MANIFEST_NAME

    def path(self, name: str) -> Path:
        return self.artifacts_dir / name

    def report_path(self, name: str) -> Path:
        return self.reports_dir / name

    def exists(self, name: str) -> bool:
        return self.path(name).is_file()

    def list_artifacts(self) -> List[str]:
        return sorted(p.name for p in self.artifacts_dir.iterdir() if p.is_file())

    # Generic frames and documents

    def write_frame(
        self,
        name: str,
        frame: pd.DataFrame,
        stage: str,
        params: Optional[Mapping[str, Any]] = None,
        directory: Optional[Path] = None,
    ) -> Path:
        """CSV with a '# stage=... params=...' first line and fixed float format."""
        file_path = (directory or self.artifacts_dir) / name
        header = f"# stage={stage} params={params_hash(dict(params or {}))}\n"
        try:
            with open(file_path, "w", encoding="utf-8", newline="") as f:
                f.write(header)
                frame.to_csv(f, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        except OSError as e:
            raise StorageError(f"Failed to write artifact: {e}", source=str(file_path))
        return file_path

    def read_frame(self, name: str, dtype: Optional[Dict[str, Any]] = None) -> pd.DataFrame:
        file_path = self.path(name)
        if not file_path.is_file():
            raise IncompleteRunError("Artifact missing; run the earlier stages first", source=str(file_path))
        with open(file_path, "r", encoding="utf-8") as f:
            skip = 1 if f.readline().startswith("#") else 0
        try:
            return pd.read_csv(file_path, skiprows=skip, dtype=dtype, keep_default_na=False, na_values=[""])
        except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
            raise StorageError(f"Unreadable artifact: {e}", source=str(file_path))

    def stage_of(self, name: str) -> Optional[str]:
        """Producing stage recorded in an artifact's first line."""
        with open(self.path(name), "r", encoding="utf-8") as f:
            first = f.readline()
        if not first.startswith("# stage="):
            return None
        return first[len("# stage=") :].split()[0]

    def write_json(self, name: str, data: Dict[str, Any], report: bool = False) -> Path:
        target = self.report_path(name) if report else self.path(name)
        try:
            return save_json_file(data, target)
        except OSError as e:
            raise StorageError(f"Failed to write document: {e}", source=str(target))

    def read_json(self, name: str, report: bool = False) -> Dict[str, Any]:
        file_path = self.report_path(name) if report else self.path(name)
        if not file_path.is_file():
            raise IncompleteRunError("Document missing; run the earlier stages first", source=str(file_path))
        with open(file_path, "r", encoding="utf-8") as f:
            return json.load(f)

    # climate

    def write_features(
        self,
        features: Sequence[FeatureVector],
        columns: Sequence[str],
        standardizer: Standardizer,
        params: Mapping[str, Any],
    ) -> Path:
        frame = pd.DataFrame([f.values for f in features], columns=list(columns))
        frame.insert(0, "port_id", [f.port_id for f in features])
        self.write_json("standardizer.json", {"columns": list(columns), **standardizer.to_dict()})
        return self.write_frame("features.csv", frame, "climate", params)

    def read_features(self) -> Tuple[List[FeatureVector], List[str], Standardizer]:
        frame = self.read_frame("features.csv", dtype={"port_id": str})
        columns = [c for c in frame.columns if c != "port_id"]
        features = [
            FeatureVector(pid, row)
            for pid, row in zip(frame["port_id"], frame[columns].to_numpy(dtype=float))
        ]
        document = self.read_json("standardizer.json")
        return features, columns, Standardizer.from_dict(document)

    # cluster

    def write_clusters(self, labeling: ClusterLabeling, params: Mapping[str, Any]) -> Path:
        frame = pd.DataFrame(
            {
                "port_id": list(labeling.port_ids),
                "cluster": list(labeling.labels),
                "stability": [
                    labeling.stabilities.get(label, 0.0) if label != NOISE else 0.0
                    for label in labeling.labels
                ],
            }
        )
        return self.write_frame("clusters.csv", frame, "cluster", params)

    def read_clusters(self) -> ClusterLabeling:
        frame = self.read_frame("clusters.csv", dtype={"port_id": str})
        labels = [int(x) for x in frame["cluster"]]
        stabilities = {
            int(label): float(s)
            for label, s in zip(frame["cluster"], frame["stability"])
            if int(label) != NOISE
        }
        return ClusterLabeling(tuple(frame["port_id"]), tuple(labels), stabilities)

    # similarity

    def write_matrix(self, name: str, matrix: PortMatrix, stage: str, params: Mapping[str, Any]) -> Path:
        return self.write_frame(name, matrix.to_frame().reset_index(), stage, params)

    def read_matrix(self, name: str, cls: type = PortMatrix) -> PortMatrix:
        frame = self.read_frame(name, dtype={"port_id": str})
        frame = frame.set_index("port_id")
        frame.columns = [str(c) for c in frame.columns]
        return cls.from_frame(frame)

    # ingest

    def write_port_calls(self, calls: Sequence[PortCall], params: Mapping[str, Any]) -> Path:
        frame = pd.DataFrame(
            [
                {
                    "mmsi": c.mmsi,
                    "port_id": c.port_id,
                    "arrival": format_timestamp(c.arrival),
                    "departure": format_timestamp(c.departure),
                    "dwell_hours": c.dwell_hours,
                }
                for c in calls
            ],
            columns=["mmsi", "port_id", "arrival", "departure", "dwell_hours"],
        )
        return self.write_frame("port_calls.csv", frame, "ingest", params)

    def write_voyages(self, voyages: Sequence[Voyage], params: Mapping[str, Any]) -> Path:
        frame = pd.DataFrame(
            [
                {
                    "mmsi": v.mmsi,
                    "origin": v.origin,
                    "destination": v.destination,
                    "depart": format_timestamp(v.depart),
                    "arrive": format_timestamp(v.arrive),
                    "month_index": v.month_index,
                    "dwell_hours": v.dwell_hours,
                }
                for v in voyages
            ],
            columns=["mmsi", "origin", "destination", "depart", "arrive", "month_index", "dwell_hours"],
        )
        return self.write_frame("voyages.csv", frame, "ingest", params)

    def read_voyages(self) -> List[Voyage]:
        frame = self.read_frame("voyages.csv", dtype={"origin": str, "destination": str, "depart": str, "arrive": str})
        return [
            Voyage(
                mmsi=int(row.mmsi),
                origin=row.origin,
                destination=row.destination,
                depart=pd.Timestamp(row.depart).timestamp(),
                arrive=pd.Timestamp(row.arrive).timestamp(),
                dwell_hours=float(row.dwell_hours),
            )
            for row in frame.itertuples(index=False)
        ]

    def write_vessels(self, vessels: Mapping[int, VesselInfo], params: Mapping[str, Any]) -> Path:
        frame = pd.DataFrame(
            [{"mmsi": v.mmsi, "callsign": v.callsign, "shipname": v.shipname} for _, v in sorted(vessels.items())],
            columns=["mmsi", "callsign", "shipname"],
        )
        return self.write_frame("vessels.csv", frame, "ingest", params)

    def read_vessels(self) -> Dict[int, VesselInfo]:
        if not self.exists("vessels.csv"):
            return {}
        frame = self.read_frame("vessels.csv", dtype={"callsign": str, "shipname": str})
        return {
            int(r.mmsi): VesselInfo(int(r.mmsi), str(r.callsign or ""), str(r.shipname or ""))
            for r in frame.fillna("").itertuples(index=False)
        }

    # graph

    def write_snapshots(self, snapshots: Sequence[MobilitySnapshot], params: Mapping[str, Any]) -> Path:
        """Edge rows per month; a month without edges keeps one row with weight 0."""
        records: List[Dict[str, Any]] = []
        for snap in snapshots:
            edges = snap.edges()
            if not edges:
                records.append({"month_index": snap.month_index, "origin": "", "destination": "", "weight": 0})
            for i, j, w in edges:
                records.append(
                    {
                        "month_index": snap.month_index,
                        "origin": snap.port_ids[i],
                        "destination": snap.port_ids[j],
                        "weight": w,
                    }
                )
        frame = pd.DataFrame.from_records(records, columns=["month_index", "origin", "destination", "weight"])
        return self.write_frame("snapshots.csv", frame, "graph", params)

    def read_snapshots(self, port_ids: Sequence[str], window: int = 1) -> List[MobilitySnapshot]:
        frame = self.read_frame("snapshots.csv", dtype={"origin": str, "destination": str})
        frame[["origin", "destination"]] = frame[["origin", "destination"]].fillna("")
        index = {p: i for i, p in enumerate(port_ids)}
        n = len(port_ids)
        snapshots = []
        for month, group in frame.groupby("month_index", sort=True):
            edges = group[group["origin"] != ""]
            unknown = sorted((set(edges["origin"]) | set(edges["destination"])) - set(index))
            if unknown:
                raise StorageError(f"Snapshot references unknown ports {unknown}", source=str(self.path("snapshots.csv")))
            weights = sp.coo_matrix(
                (
                    edges["weight"].to_numpy(dtype=np.int64),
                    ([index[p] for p in edges["origin"]], [index[p] for p in edges["destination"]]),
                ),
                shape=(n, n),
            )
            snapshots.append(MobilitySnapshot(int(month), tuple(port_ids), weights.tocsr(), window=window))
        return snapshots

    # forecast

    def write_predictions(
        self,
        predictions: Mapping[int, np.ndarray],
        port_ids: Sequence[str],
        params: Mapping[str, Any],
    ) -> Path:
        months = sorted(predictions)
        frame = prediction_frame(months, [predictions[m] for m in months], port_ids)
        return self.write_frame("predictions.csv", frame, "forecast", params)

    def read_predictions(self, port_ids: Sequence[str]) -> Dict[int, np.ndarray]:
        frame = self.read_frame("predictions.csv", dtype={"origin": str, "destination": str})
        index = {p: i for i, p in enumerate(port_ids)}
        n = len(port_ids)
        out: Dict[int, np.ndarray] = {}
        for month, group in frame.groupby("month_index", sort=True):
            Y = np.full((n, n), PROBABILITY_FLOOR)
            rows = [index[p] for p in group["origin"]]
            cols = [index[p] for p in group["destination"]]
            Y[rows, cols] = group["probability"].to_numpy(dtype=float)
            out[int(month)] = Y
        return out

    # risk

    def write_exposure(self, report: ExposureReport, params: Mapping[str, Any]) -> Path:
        records = [
            {
                "port_id": port,
                "month_index": month,
                "E1": float(report.one_hop[t, k]),
                "E_multi": float(report.multi_hop[t, k]),
            }
            for t, month in enumerate(report.months)
            for k, port in enumerate(report.port_ids)
        ]
        frame = pd.DataFrame.from_records(records, columns=["port_id", "month_index", "E1", "E_multi"])
        return self.write_frame("exposure.csv", frame, "risk", params)

    def read_exposure(self) -> pd.DataFrame:
        return self.read_frame("exposure.csv", dtype={"port_id": str})

    def write_triplets(self, triplets: Sequence[RankedTriplet], params: Mapping[str, Any]) -> Path:
        frame = pd.DataFrame(
            [
                {
                    "rank": t.rank,
                    "mmsi": t.mmsi,
                    "port_id": t.port_id,
                    "month_index": t.month_index,
                    "score": t.score,
                    "kind": t.kind,
                    "path": ">".join(t.path),
                }
                for t in triplets
            ],
            columns=["rank", "mmsi", "port_id", "month_index", "score", "kind", "path"],
        )
        return self.write_frame("triplets.csv", frame, "risk", params)

    def read_triplets(self) -> List[RankedTriplet]:
        frame = self.read_frame("triplets.csv", dtype={"mmsi": str, "port_id": str, "kind": str, "path": str})
        frame["path"] = frame["path"].fillna("")
        return [
            RankedTriplet(
                rank=int(r.rank),
                mmsi=r.mmsi,
                port_id=r.port_id,
                month_index=int(r.month_index),
                score=float(r.score),
                kind=r.kind,
                path=tuple(r.path.split(">")) if r.path else (),
            )
            for r in frame.itertuples(index=False)
        ]

    def write_shipments(self, shipments: Sequence[ShipmentScore], params: Mapping[str, Any]) -> Path:
        frame = pd.DataFrame(
            [
                {
                    "mmsi": s.mmsi,
                    "port_id": s.port_id,
                    "month_index": s.month_index,
                    "path": ">".join(s.path),
                    "rho": s.rho,
                    "voyage_factor": s.voyage_factor,
                }
                for s in shipments
            ],
            columns=["mmsi", "port_id", "month_index", "path", "rho", "voyage_factor"],
        )
        return self.write_frame("shipments.csv", frame, "risk", params)
