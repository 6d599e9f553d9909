"""Synthetic scenario generator command."""

from pathlib import Path

import click

from invasionrisk.cli.common import handle_errors
from invasionrisk.core.fixture import generate_fixture
from invasionrisk.utils.exceptions import EXIT_DATA
from invasionrisk.utils.helpers import console


@click.command(name="fixture")
@click.argument("out_dir", required=False, type=click.Path(file_okay=False, path_type=Path))
@click.pass_context
@handle_errors
def fixture_cmd(ctx, out_dir):
    """Write the Nova Scotia scenario inputs and config.json.

    OUT_DIR defaults to the global --out directory, else ./fixture.
    """
    target = out_dir or ctx.obj.get("out_dir") or Path("fixture")
    seed = ctx.obj.get("seed") or 0
    try:
        files = generate_fixture(target, seed)
    except OSError as e:
        console.print(f"[red]Cannot write fixture: {e}[/red]")
        ctx.exit(EXIT_DATA)
    console.print(f"[green]✓ Fixture written to {files.root}[/green]")
    console.print(f"Run it with: invasion-risk --config {files.config} run")
