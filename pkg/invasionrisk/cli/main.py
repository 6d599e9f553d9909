"""Main CLI entry point for the invasion risk pipeline."""

import sys
from pathlib import Path

import click
from dotenv import load_dotenv
from rich.markup import escape
from rich.traceback import install

from invasionrisk import __version__
from invasionrisk.cli.commands.fixture import fixture_cmd
from invasionrisk.cli.commands.report import report_cmd
from invasionrisk.cli.commands.run import run_cmd
from invasionrisk.cli.commands.stages import (
    cluster_cmd,
    forecast_cmd,
    graph_cmd,
    ingest_cmd,
    risk_cmd,
    similarity_cmd,
)
from invasionrisk.core.pipeline import STAGES
from invasionrisk.utils.exceptions import EXIT_INTERNAL, InvasionRiskError
from invasionrisk.utils.helpers import console, setup_logging

# Install rich traceback handler
install(show_locals=True)

# Load environment variables from .env file
load_dotenv(dotenv_path=".env", verbose=False)


@click.group()
@click.version_option(version=__version__, prog_name="invasion-risk")
@click.option(
    "--config",
    "-c",
    "config_path",
    type=click.Path(dir_okay=False, path_type=Path),
    envvar="INVASIONRISK_CONFIG",
    help="Pipeline configuration JSON",
)
@click.option(
    "--out",
    "-o",
    "out_dir",
    type=click.Path(file_okay=False, path_type=Path),
    envvar="INVASIONRISK_OUT",
    help="Output directory (overrides output_dir)",
)
@click.option(
    "--seed",
    type=click.IntRange(0, 2**64 - 1),
    envvar="INVASIONRISK_SEED",
    help="Random seed (overrides seed)",
)
@click.option(
    "--threads",
    type=click.IntRange(min=1),
    envvar="INVASIONRISK_THREADS",
    help="Worker threads per stage (overrides threads)",
)
@click.option(
    "--from-stage",
    type=click.Choice(STAGES),
    help="Resume `run` from this stage using earlier artifacts (run only)",
)
@click.option("--verbose", "-v", is_flag=True, help="Enable verbose output")
@click.option("--log-file", type=click.Path(dir_okay=False), help="Also log to this file")
@click.option("--no-color", is_flag=True, help="Disable colored output")
@click.pass_context
def cli(ctx, config_path, out_dir, seed, threads, from_stage, verbose, log_file, no_color):
    """Marine invasive-species risk from climate matching and vessel mobility.

    Stages run climate -> cluster -> similarity -> ingest -> graph ->
    forecast -> risk -> report, writing artifacts under the output directory.
    """
    ctx.ensure_object(dict)
    if from_stage and ctx.invoked_subcommand != "run":
        raise click.UsageError("--from-stage only applies to the run command", ctx=ctx)
    ctx.obj.update(
        config_path=config_path,
        out_dir=out_dir,
        seed=seed,
        threads=threads,
        from_stage=from_stage,
        verbose=verbose,
    )
    if no_color:
        console.no_color = True
    setup_logging(verbose, log_file)


cli.add_command(cluster_cmd)
cli.add_command(similarity_cmd)
cli.add_command(ingest_cmd)
cli.add_command(graph_cmd)
cli.add_command(forecast_cmd)
cli.add_command(risk_cmd)
cli.add_command(report_cmd)
cli.add_command(fixture_cmd)
cli.add_command(run_cmd)


def main():
    """Main entry point."""
    try:
        cli()
    except InvasionRiskError as e:
        console.print(f"[red]Error: {escape(str(e))}[/red]")
        sys.exit(e.exit_code)
    except KeyboardInterrupt:
        console.print("\n[yellow]Operation cancelled by user[/yellow]")
        sys.exit(EXIT_INTERNAL)
    except Exception as e:
        console.print(f"[red]Unexpected error: {escape(str(e))}[/red]")
        console.print_exception()
        sys.exit(EXIT_INTERNAL)


if __name__ == "__main__":
    main()
