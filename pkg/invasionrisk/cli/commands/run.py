"""Full pipeline command."""

import click

from invasionrisk.cli.commands.report import show_report
from invasionrisk.cli.common import handle_errors, manifest_table, pipeline_config, run_stages
from invasionrisk.utils.helpers import console


@click.command(name="run")
@click.option("--xlsx", is_flag=True, help="Also write an Excel workbook")
@click.pass_context
@handle_errors
def run_cmd(ctx, xlsx):
    """Run every stage, or resume with --from-stage."""
    manifest = run_stages(ctx, ctx.obj.get("from_stage"), None, xlsx=xlsx)
    console.print(manifest_table(manifest))
    show_report(pipeline_config(ctx))
