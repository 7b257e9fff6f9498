"""``run``: execute a full simulation and write its CSV."""

from __future__ import annotations

from pathlib import Path
from typing import Annotated

import typer
from rich.console import Console
from rich.table import Table

from src.commands.errors import cli_errors
from src.operations.federation import run_simulation
from src.operations.presets import resolve_experiment
from src.operations.reporting import emit_csv, summarize_report

console = Console()


def _fmt(value: object) -> str:
    if value is None:
        return "-"
    return f"{value:.4f}" if isinstance(value, float) else str(value)


def run(
    target: Annotated[
        str | None, typer.Argument(help="Preset name or path to a JSON config")
    ] = None,
    config: Annotated[
        Path | None, typer.Option("--config", help="Path to a JSON config")
    ] = None,
    seed: Annotated[
        int | None, typer.Option("--seed", min=0, max=2**64 - 1, help="Override every seed")
    ] = None,
    out: Annotated[Path | None, typer.Option("--out", help="CSV output path")] = None,
    threads: Annotated[
        int | None, typer.Option("--threads", min=1, help="Client-update workers")
    ] = None,
) -> None:
    """Run every round of an experiment and write the per-round CSV."""
    with cli_errors():
        experiment = resolve_experiment(target, config, seed=seed)
        report = run_simulation(experiment, threads=threads)
        path = out or experiment.output or Path(f"{experiment.name}.csv")
        sidecar = emit_csv(report, path)

    summary = summarize_report(report)
    table = Table(title=experiment.name)
    table.add_column("measure")
    table.add_column("value", justify="right")
    for field, value in summary.model_dump().items():
        table.add_row(field, _fmt(value))
    table.add_row("csv", str(path))
    table.add_row("metadata", str(sidecar))
    console.print(table)
