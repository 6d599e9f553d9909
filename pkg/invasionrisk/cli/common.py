"""Helpers shared by the CLI commands."""

import functools
from typing import Any, Callable, Optional

import click
from rich.markup import escape
from rich.progress import Progress, SpinnerColumn, TextColumn, TimeElapsedColumn
from rich.table import Table

from invasionrisk.core.config import PipelineConfig, load_config
from invasionrisk.core.pipeline import Pipeline, RunManifest, select_stages
from invasionrisk.utils.exceptions import EXIT_INTERNAL, InvasionRiskError
from invasionrisk.utils.helpers import console


def pipeline_config(ctx: click.Context) -> PipelineConfig:
    """Config file plus global flag overrides (flag > file > default)."""
    obj = ctx.obj or {}
    return load_config(
        obj.get("config_path"),
        seed=obj.get("seed"),
        threads=obj.get("threads"),
        output_dir=obj.get("out_dir"),
    )


def handle_errors(func: Callable[..., Any]) -> Callable[..., Any]:
    """Print pipeline errors in red and exit with their code."""

    @functools.wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        ctx = click.get_current_context()
        try:
            return func(*args, **kwargs)
        except (click.exceptions.Exit, click.exceptions.Abort, click.ClickException):
            raise
        except InvasionRiskError as e:
            console.print(f"[red]Error: {escape(str(e))}[/red]")
            ctx.exit(e.exit_code)
        except Exception as e:
            console.print(f"[red]Unexpected error: {escape(str(e))}[/red]")
            if (ctx.obj or {}).get("verbose"):
                console.print_exception()
            ctx.exit(EXIT_INTERNAL)

    return wrapper


def run_stages(
    ctx: click.Context,
    from_stage: Optional[str] = None,
    to_stage: Optional[str] = None,
    xlsx: bool = False,
) -> RunManifest:
    config = pipeline_config(ctx)
    stages = select_stages(from_stage, to_stage)
    pipeline = Pipeline(config, xlsx=xlsx)
    with Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        TimeElapsedColumn(),
        console=console,
        transient=True,
    ) as progress:
        task = progress.add_task("Starting...", total=len(stages))

        def on_stage(name: str) -> None:
            progress.update(task, description=f"Stage {name}", completed=stages.index(name))

        manifest = pipeline.run(stages[0], stages[-1], on_stage)
        progress.update(task, completed=len(stages))
    console.print(f"[green]✓ {', '.join(stages)} complete; outputs in {pipeline.store.base_path}[/green]")
    return manifest


def manifest_table(manifest: RunManifest) -> Table:
    table = Table(title="Run summary")
    table.add_column("Item", style="cyan")
    table.add_column("Value", style="magenta", justify="right")
    for stage, seconds in manifest.timings.items():
        table.add_row(f"stage {stage}", f"{seconds:.2f} s")
    for name, value in manifest.counts.items():
        table.add_row(name, str(value))
    return table
