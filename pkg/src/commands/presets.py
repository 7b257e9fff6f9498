"""``presets list`` and ``presets show``."""

from __future__ import annotations

from typing import Annotated

import typer
from rich.console import Console
from rich.table import Table

from src.commands.errors import cli_errors
from src.operations.presets import get_preset, list_presets
from src.operations.reporting import config_json

app = typer.Typer(name="presets", help="Browse the experiment catalogue.", no_args_is_help=True)
console = Console()


@app.command("list")
def list_command() -> None:
    """List every preset with what it reproduces."""
    table = Table()
    table.add_column("name", no_wrap=True)
    table.add_column("anchor")
    table.add_column("description")
    for preset in list_presets():
        table.add_row(preset.name, preset.anchor, preset.description)
    console.print(table)


@app.command("show")
def show(name: Annotated[str, typer.Argument(help="Preset name")]) -> None:
    """Print the fully resolved JSON config of a preset."""
    with cli_errors():
        preset = get_preset(name)
    typer.echo(config_json(preset.config), nl=False)
