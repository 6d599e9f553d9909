"""Run summary: ranked triplets, per-port exposure series and what-if deltas."""

import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

import pandas as pd
from pydantic import BaseModel
from tabulate import tabulate

from invasionrisk.core.clustering import NOISE
from invasionrisk.core.climate import read_port_registry
from invasionrisk.core.config import PipelineConfig
from invasionrisk.core.storage import ArtifactStore
from invasionrisk.utils.exceptions import StorageError
from invasionrisk.utils.helpers import file_sha256, format_month, save_json_file

logger = logging.getLogger(__name__)

REPORT_FORMAT_VERSION = 1
ZERO_EXPOSURE = "Zero exposure at every port and month; no triplets ranked."


class ReportParameters(BaseModel):
    gamma: float
    hops: int
    path_hops: int
    eta: float
    beta: float
    clamp: bool
    tau: float
    delta: int
    lags: int
    min_cluster_size: int
    min_samples: int
    seed: int


class TripletEntry(BaseModel):
    rank: int
    kind: str
    mmsi: str
    vessel: str = ""
    port_id: str
    port_name: str = ""
    month_index: int
    month: str
    score: float
    path: List[str] = []


class PortSeries(BaseModel):
    port_id: str
    name: str = ""
    cluster: Optional[int] = None
    one_hop: List[float]
    multi_hop: List[float]
    peak_month: Optional[str] = None
    peak_exposure: float = 0.0


class WhatIfEntry(BaseModel):
    month_index: int
    month: str
    total_before: float
    total_after: float
    reduction: float
    meets_target: Optional[bool] = None


class ReportDocument(BaseModel):
    """Machine-readable run report; report.schema.json is generated from this model."""

    format_version: int = REPORT_FORMAT_VERSION
    summary: str
    zero_exposure: bool
    parameters: ReportParameters
    fingerprints: Dict[str, str]
    months: List[str]
    top_triplets: List[TripletEntry]
    n_triplets: int
    ports: List[PortSeries]
    what_if_rules: List[Dict[str, Any]] = []
    what_if: List[WhatIfEntry] = []


def report_parameters(config: PipelineConfig) -> ReportParameters:
    return ReportParameters(
        gamma=config.risk.gamma,
        hops=config.risk.hops,
        path_hops=config.risk.path_hops,
        eta=config.kernel.eta,
        beta=config.kernel.beta,
        clamp=config.kernel.clamp,
        tau=config.forecast.tau,
        delta=config.forecast.delta,
        lags=config.forecast.lags,
        min_cluster_size=config.clustering.min_cluster_size,
        min_samples=config.clustering.min_samples,
        seed=config.seed,
    )


def _port_names(config: PipelineConfig) -> Dict[str, str]:
    path = config.inputs.ports
    if path is None or not Path(path).is_file():
        return {}
    return {p.port_id: p.name for p in read_port_registry(path)}


def _port_series(
    exposure: pd.DataFrame, names: Dict[str, str], clusters: Dict[str, int]
) -> List[PortSeries]:
    out = []
    for port_id, group in exposure.groupby("port_id", sort=False):
        group = group.sort_values("month_index")
        multi = group["E_multi"].astype(float).tolist()
        peak = max(range(len(multi)), key=lambda k: (multi[k], -k)) if multi else None
        label = clusters.get(port_id)
        out.append(
            PortSeries(
                port_id=port_id,
                name=names.get(port_id, ""),
                cluster=None if label is None or label == NOISE else label,
                one_hop=group["E1"].astype(float).tolist(),
                multi_hop=multi,
                peak_month=format_month(group["month_index"].iloc[peak]) if peak is not None and multi[peak] > 0 else None,
                peak_exposure=multi[peak] if peak is not None else 0.0,
            )
        )
    return out


def build_report(store: ArtifactStore, config: PipelineConfig) -> ReportDocument:
    """Assemble the report document from risk-stage artifacts."""
    exposure = store.read_exposure()
    triplets = store.read_triplets()
    vessels = store.read_vessels()
    names = _port_names(config)
    clusters = store.read_clusters().as_dict() if store.exists("clusters.csv") else {}

    top = [
        TripletEntry(
            rank=t.rank,
            kind=t.kind,
            mmsi=t.mmsi,
            vessel=vessels[int(t.mmsi)].shipname if t.mmsi.isdigit() and int(t.mmsi) in vessels else "",
            port_id=t.port_id,
            port_name=names.get(t.port_id, ""),
            month_index=t.month_index,
            month=format_month(t.month_index),
            score=t.score,
            path=list(t.path),
        )
        for t in triplets[: config.risk.top_n]
    ]

    what_if_rules: List[Dict[str, Any]] = []
    what_if: List[WhatIfEntry] = []
    if store.exists("what_if.json"):
        document = store.read_json("what_if.json")
        what_if_rules = document.get("rules", [])
        what_if = [
            WhatIfEntry(
                month_index=m["month_index"],
                month=format_month(m["month_index"]),
                total_before=m["total_before"],
                total_after=m["total_after"],
                reduction=m["reduction"],
                meets_target=m.get("meets_target"),
            )
            for m in document.get("months", [])
        ]

    zero = bool((exposure[["E1", "E_multi"]].to_numpy(dtype=float) == 0).all())
    if zero and not triplets:
        summary = ZERO_EXPOSURE
    elif top:
        lead = top[0]
        summary = (
            f"Highest risk: {lead.kind} {lead.mmsi} at {lead.port_id} in {lead.month} "
            f"(score {lead.score:.4f}); {len(triplets)} triplets ranked."
        )
    else:
        summary = "No triplets ranked."

    months = sorted(int(m) for m in exposure["month_index"].unique())
    return ReportDocument(
        summary=summary,
        zero_exposure=zero,
        parameters=report_parameters(config),
        fingerprints={
            name: file_sha256(path)
            for name, path in sorted(config.inputs.declared().items())
            if Path(path).is_file()
        },
        months=[format_month(m) for m in months],
        top_triplets=top,
        n_triplets=len(triplets),
        ports=_port_series(exposure, names, clusters),
        what_if_rules=what_if_rules,
        what_if=what_if,
    )


def render_text(document: ReportDocument) -> str:
    """Plain-text report with tabulate tables."""
    p = document.parameters
    lines = [
        "Invasion risk report",
        "",
        document.summary,
        "",
        f"gamma={p.gamma} H={p.hops} path_hops={p.path_hops} eta={p.eta} beta={p.beta} "
        f"tau={p.tau} delta={p.delta} seed={p.seed}",
        "",
    ]
    if document.top_triplets:
        rows = [
            [t.rank, t.kind, t.mmsi, t.vessel, t.port_id, t.month, f"{t.score:.6f}", ">".join(t.path)]
            for t in document.top_triplets
        ]
        lines.append(
            tabulate(rows, headers=["Rank", "Kind", "MMSI", "Vessel", "Port", "Month", "Score", "Path"])
        )
        lines.append("")
    port_rows = [
        [s.port_id, s.name, "" if s.cluster is None else s.cluster, s.peak_month or "", f"{s.peak_exposure:.6f}"]
        for s in document.ports
    ]
    lines.append(tabulate(port_rows, headers=["Port", "Name", "Cluster", "Peak month", "Peak E"]))
    if document.what_if:
        lines.append("")
        what_rows = [
            [w.month, f"{w.total_before:.6f}", f"{w.total_after:.6f}", f"{w.reduction:.4f}",
             "" if w.meets_target is None else ("yes" if w.meets_target else "no")]
            for w in document.what_if
        ]
        lines.append(tabulate(what_rows, headers=["Month", "E before", "E after", "Reduction", "Target met"]))
    return "\n".join(lines) + "\n"


def exposure_series_frame(document: ReportDocument, months: List[int]) -> pd.DataFrame:
    records = []
    for series in document.ports:
        for month, e1, e in zip(months, series.one_hop, series.multi_hop):
            records.append(
                {
                    "port_id": series.port_id,
                    "month_index": month,
                    "month": format_month(month),
                    "E1": e1,
                    "E_multi": e,
                }
            )
    return pd.DataFrame.from_records(records, columns=["port_id", "month_index", "month", "E1", "E_multi"])


def export_xlsx(document: ReportDocument, output_path: Path) -> Path:
    """Excel workbook with Summary, Triplets, Exposure and What-if sheets."""
    import openpyxl
    from openpyxl.styles import Font

    wb = openpyxl.Workbook()
    wb.remove(wb.active)

    summary_sheet = wb.create_sheet("Summary")
    summary_sheet.append(["Invasion Risk Report"])
    summary_sheet.append([""])
    summary_sheet.append(["Summary", document.summary])
    for key, value in document.parameters.model_dump().items():
        summary_sheet.append([key, value])
    summary_sheet.append([""])
    summary_sheet.append(["Input", "SHA-256"])
    for name, digest in document.fingerprints.items():
        summary_sheet.append([name, digest])
    for row in summary_sheet.iter_rows(min_row=1, max_row=1):
        for cell in row:
            cell.font = Font(bold=True, size=14)

    if document.top_triplets:
        sheet = wb.create_sheet("Triplets")
        sheet.append(["Rank", "Kind", "MMSI", "Vessel", "Port", "Month", "Score", "Path"])
        for t in document.top_triplets:
            sheet.append([t.rank, t.kind, t.mmsi, t.vessel, t.port_id, t.month, t.score, ">".join(t.path)])
        for cell in sheet[1]:
            cell.font = Font(bold=True)

    sheet = wb.create_sheet("Exposure")
    sheet.append(["Port", "Month", "E1", "E_multi"])
    for series in document.ports:
        for month, e1, e in zip(document.months, series.one_hop, series.multi_hop):
            sheet.append([series.port_id, month, e1, e])
    for cell in sheet[1]:
        cell.font = Font(bold=True)

    if document.what_if:
        sheet = wb.create_sheet("What-if")
        sheet.append(["Month", "E before", "E after", "Reduction", "Target met"])
        for w in document.what_if:
            sheet.append([w.month, w.total_before, w.total_after, w.reduction, w.meets_target])
        for cell in sheet[1]:
            cell.font = Font(bold=True)

    try:
        wb.save(output_path)
    except OSError as e:
        raise StorageError(f"Failed to write workbook: {e}", source=str(output_path))
    return output_path


def emit_report(store: ArtifactStore, config: PipelineConfig, xlsx: bool = False) -> ReportDocument:
    """Write report.json, its schema, report.txt, exposure_series.csv and optionally report.xlsx."""
    document = build_report(store, config)
    save_json_file(document.model_dump(mode="json"), store.report_path("report.json"))
    save_json_file(ReportDocument.model_json_schema(), store.report_path("report.schema.json"))
    try:
        store.report_path("report.txt").write_text(render_text(document), encoding="utf-8")
    except OSError as e:
        raise StorageError(f"Failed to write report: {e}", source=str(store.report_path("report.txt")))
    months = sorted(int(m) for m in store.read_exposure()["month_index"].unique())
    store.write_frame(
        "exposure_series.csv",
        exposure_series_frame(document, months),
        "report",
        {"top_n": config.risk.top_n},
        directory=store.reports_dir,
    )
    if xlsx:
        export_xlsx(document, store.report_path("report.xlsx"))
    logger.info(f"Report written to {store.reports_dir}")
    return document
