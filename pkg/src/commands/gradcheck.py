"""``gradcheck``: finite-difference check of every architecture."""

from __future__ import annotations

from typing import Annotated

import typer
from rich.console import Console
from rich.table import Table

from src.operations.gradcheck import GRADCHECK_TOLERANCE, run_suite

console = Console()


def gradcheck(
    seeds: Annotated[int, typer.Option("--seeds", min=1, help="Number of seeds")] = 3,
    samples: Annotated[
        int, typer.Option("--samples", min=1, help="Parameter entries per model")
    ] = 50,
) -> None:
    """Compare reverse-mode gradients with central differences in float64."""
    results = run_suite(range(seeds), samples=samples)

    worst: dict[str, float] = {}
    for r in results:
        worst[r.name] = max(worst.get(r.name, 0.0), r.max_rel_error)
    table = Table(title=f"max relative error (tolerance {GRADCHECK_TOLERANCE:g})")
    table.add_column("model")
    table.add_column("max relative error", justify="right")
    table.add_column("status")
    for name, err in worst.items():
        ok = err < GRADCHECK_TOLERANCE
        table.add_row(name, f"{err:.3e}", "[green]ok[/green]" if ok else "[red]FAIL[/red]")
    console.print(table)
    if not all(r.passed for r in results):
        raise typer.Exit(code=1)
