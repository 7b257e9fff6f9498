"""``partition inspect``: per-client class histograms of an experiment."""

from __future__ import annotations

from pathlib import Path
from typing import Annotated

import typer

from src.commands.errors import cli_errors
from src.config import settings
from src.operations.federation import setup_partitions
from src.operations.partition import class_histogram
from src.operations.presets import resolve_experiment

app = typer.Typer(name="partition", help="Inspect client data partitions.", no_args_is_help=True)


@app.command("inspect")
def inspect(
    target: Annotated[
        str | None, typer.Argument(help="Preset name or path to a JSON config")
    ] = None,
    config: Annotated[Path | None, typer.Option("--config")] = None,
    seed: Annotated[int | None, typer.Option("--seed", min=0, max=2**64 - 1)] = None,
) -> None:
    """Print one CSV row of class counts per client and split."""
    with cli_errors():
        experiment = resolve_experiment(target, config, seed=seed)
        assignments = setup_partitions(experiment, settings.data_dir)

    width = max(train.classes for _, train, _ in assignments)
    typer.echo(",".join(["client", "split", *(f"class_{c}" for c in range(width))]))
    for data, train, test in assignments:
        for split, dataset in (("train", train), ("validate", test)):
            counts = [int(v) for v in class_histogram(data, dataset, split)]
            counts += [0] * (width - len(counts))
            typer.echo(",".join([str(data.client_id), split, *map(str, counts)]))
