"""Report command."""

import click
from rich.table import Table

from invasionrisk.cli.common import handle_errors, pipeline_config, run_stages
from invasionrisk.core.config import PipelineConfig
from invasionrisk.core.report import ReportDocument
from invasionrisk.core.storage import ArtifactStore
from invasionrisk.utils.helpers import console


def report_table(document: ReportDocument) -> Table:
    table = Table(title=f"Top {len(document.top_triplets)} of {document.n_triplets} triplets")
    table.add_column("Rank", justify="right")
    table.add_column("Kind", style="blue")
    table.add_column("MMSI", style="cyan")
    table.add_column("Port", style="green")
    table.add_column("Month", style="yellow")
    table.add_column("Score", style="magenta", justify="right")
    table.add_column("Path")
    for t in document.top_triplets:
        table.add_row(str(t.rank), t.kind, t.mmsi, t.port_id, t.month, f"{t.score:.4f}", ">".join(t.path))
    return table


def show_report(config: PipelineConfig) -> None:
    store = ArtifactStore(config.output_dir)
    document = ReportDocument.model_validate(store.read_json("report.json", report=True))
    console.print(f"[bold blue]{document.summary}[/bold blue]")
    if document.top_triplets:
        console.print(report_table(document))
    console.print(f"Reports in {store.reports_dir}")


@click.command(name="report")
@click.option("--xlsx", is_flag=True, help="Also write an Excel workbook")
@click.pass_context
@handle_errors
def report_cmd(ctx, xlsx):
    """Write the run report from risk-stage artifacts."""
    run_stages(ctx, "report", "report", xlsx=xlsx)
    show_report(pipeline_config(ctx))
