"""Single-stage commands; each reads earlier stages' artifacts from the output directory."""

import click
from rich.table import Table

from invasionrisk.cli.common import handle_errors, pipeline_config, run_stages
from invasionrisk.core.storage import ArtifactStore
from invasionrisk.utils.helpers import console, format_month


@click.command(name="cluster")
@click.pass_context
@handle_errors
def cluster_cmd(ctx):
    """Extract climate features and cluster ports by environment."""
    run_stages(ctx, "climate", "cluster")
    store = ArtifactStore(pipeline_config(ctx).output_dir)
    labeling = store.read_clusters()

    table = Table(title=f"Environmental clusters ({labeling.n_clusters} found)")
    table.add_column("Port", style="cyan")
    table.add_column("Cluster", style="green")
    for port_id, label in zip(labeling.port_ids, labeling.labels):
        table.add_row(port_id, "noise" if label < 0 else str(label))
    console.print(table)


@click.command(name="similarity")
@click.pass_context
@handle_errors
def similarity_cmd(ctx):
    """Compute climate similarity and the transfer kernel."""
    run_stages(ctx, "similarity", "similarity")


@click.command(name="ingest")
@click.pass_context
@handle_errors
def ingest_cmd(ctx):
    """Decode AIS, detect port calls and extract voyages."""
    manifest = run_stages(ctx, "ingest", "ingest")
    table = Table(title="AIS ingestion")
    table.add_column("Counter", style="cyan")
    table.add_column("Value", style="magenta", justify="right")
    for name, value in manifest.ingest.items():
        table.add_row(name, str(value))
    for name in ("calls", "voyages"):
        table.add_row(name, str(manifest.counts.get(name, 0)))
    console.print(table)


@click.command(name="graph")
@click.pass_context
@handle_errors
def graph_cmd(ctx):
    """Build monthly mobility snapshots."""
    manifest = run_stages(ctx, "graph", "graph")
    console.print(f"Snapshots: {manifest.counts.get('months', 0)} months")


@click.command(name="forecast")
@click.pass_context
@handle_errors
def forecast_cmd(ctx):
    """Train the link forecaster and predict every target month."""
    manifest = run_stages(ctx, "forecast", "forecast")
    console.print(f"Training samples: {manifest.counts.get('samples', 0)}")


@click.command(name="risk")
@click.option("--limit", "-l", type=int, default=10, show_default=True, help="Triplets to show")
@click.pass_context
@handle_errors
def risk_cmd(ctx, limit):
    """Compute exposure, shipment risk and ranked triplets."""
    run_stages(ctx, "risk", "risk")
    store = ArtifactStore(pipeline_config(ctx).output_dir)
    triplets = store.read_triplets()[:limit]

    table = Table(title=f"Top triplets ({len(triplets)} shown)")
    table.add_column("Rank", justify="right")
    table.add_column("MMSI", style="cyan")
    table.add_column("Port", style="green")
    table.add_column("Month", style="yellow")
    table.add_column("Score", style="magenta", justify="right")
    for t in triplets:
        table.add_row(str(t.rank), t.mmsi, t.port_id, format_month(t.month_index), f"{t.score:.4f}")
    console.print(table)
