"""Command-line entry point."""

import logging
from typing import Annotated

import typer
from rich.console import Console
from rich.logging import RichHandler

from src import __version__
from src.config import settings

from .commands import gradcheck, partition, presets, run

logger = logging.getLogger(__name__)

app = typer.Typer(
    name="fmlsim",
    help="Deterministic cross-silo federated learning simulator.",
    no_args_is_help=True,
    pretty_exceptions_enable=False,
)

app.command("run")(run.run)
app.command("gradcheck")(gradcheck.gradcheck)
app.add_typer(partition.app)
app.add_typer(presets.app)


def _version(value: bool) -> None:
    if value:
        typer.echo(__version__)
        raise typer.Exit


@app.callback()
def main(
    log_level: Annotated[
        str | None, typer.Option("--log-level", help="Overrides FMLSIM_LOG_LEVEL")
    ] = None,
    version: Annotated[
        bool, typer.Option("--version", callback=_version, is_eager=True)
    ] = False,
) -> None:
    """Route logs to stderr; stdout only carries tables and CSV."""
    logging.basicConfig(
        level=(log_level or settings.log_level).upper(),
        format="%(message)s",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )
