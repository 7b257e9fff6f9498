"""Experiment config parsing, CSV emission and run summaries."""

from __future__ import annotations

import csv
import io
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel, ValidationError

from src.exceptions import ConfigurationError
from src.models.experiment import ExperimentConfig
from src.models.report import RunReport

logger = logging.getLogger(__name__)

CSV_HEADER = ("round", "entity", "model", "split", "accuracy", "loss")
OSCILLATION_WINDOW = 20


def _key_path(loc: tuple[int | str, ...]) -> str:
    # Discriminated unions add the tag to the location; drop it
    parts = [str(p) for p in loc if p not in ("mnist", "cifar10", "cifar100", "synthetic")]
    return ".".join(parts)


def _locate(loc: tuple[int | str, ...], message: str) -> tuple[str, str]:
    key_path = _key_path(loc)
    reason = message.removeprefix("Value error, ")
    if not key_path:
        # Cross-field checks name their key as "<path>: <reason>"
        head, sep, tail = reason.partition(": ")
        if sep and head and " " not in head:
            return head, tail
    return key_path, reason


def validate_config(data: dict[str, Any]) -> ExperimentConfig:
    """Validate a config tree, reporting the first problem with its dotted key path."""
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        raise ConfigurationError(*_locate(first["loc"], first["msg"])) from exc


def parse_config(path: Path) -> ExperimentConfig:
    """Read and validate a JSON experiment file.

    Unknown keys are rejected and every default is filled in, so the returned
    config dumps back to a complete, re-parseable description of the run.

    Raises:
        ConfigurationError: If the file is missing, is not JSON or fails validation.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise ConfigurationError("", f"config file {path} not found") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError("", f"invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigurationError("", "the config must be a JSON object")
    return validate_config(data)


def config_json(config: BaseModel) -> str:
    """Resolved config as stable, indented JSON."""
    return json.dumps(config.model_dump(mode="json"), indent=2, sort_keys=True) + "\n"


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def render_csv(report: RunReport) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in report.sorted_records():
        writer.writerow(
            (r.round, r.entity, r.model, r.split, f"{r.accuracy:.4f}", f"{r.loss:.6f}")
        )
    return buffer.getvalue()


def metadata_path(path: Path) -> Path:
    return path.with_name(f"{path.stem}.meta.json")


def emit_csv(report: RunReport, path: Path) -> Path:
    """Write the report CSV and its ``.meta.json`` sidecar, each in one atomic replace.

    Returns:
        The sidecar path.
    """
    path = Path(path)
    _atomic_write(path, render_csv(report))
    sidecar = metadata_path(path)
    meta = {"config": report.config.model_dump(mode="json"), "metadata": report.metadata}
    _atomic_write(sidecar, json.dumps(meta, indent=2, sort_keys=True) + "\n")
    logger.info("wrote %d records to %s", len(report.records), path)
    return sidecar


class RunSummary(BaseModel):
    rounds: int
    final_global_accuracy: float | None
    mean_local_accuracy: float | None
    mean_global_validate_accuracy: float | None
    global_accuracy_std: float | None


def _global_series(report: RunReport) -> list[float]:
    """Per-round global test accuracy, averaged over clients when the global is a trunk."""
    by_round: dict[int, list[float]] = {}
    for r in report.records:
        if r.model == "global" and r.split == "test":
            by_round.setdefault(r.round, []).append(r.accuracy)
    return [float(np.mean(by_round[k])) for k in sorted(by_round)]


def _final_mean(report: RunReport, model: str, split: str) -> float | None:
    rows = [r for r in report.records if r.model == model and r.split == split]
    if not rows:
        return None
    last = max(r.round for r in rows)
    return float(np.mean([r.accuracy for r in rows if r.round == last]))


def summarize_report(report: RunReport, window: int = OSCILLATION_WINDOW) -> RunSummary:
    """Headline numbers of a run.

    ``global_accuracy_std`` is the standard deviation of global test accuracy over
    the last ``window`` rounds, the measure used for oscillation.
    """
    series = _global_series(report)
    tail = series[-window:]
    return RunSummary(
        rounds=max((r.round for r in report.records), default=0),
        final_global_accuracy=series[-1] if series else None,
        mean_local_accuracy=_final_mean(report, "local", "validate"),
        mean_global_validate_accuracy=_final_mean(report, "global", "validate"),
        global_accuracy_std=float(np.std(tail)) if tail else None,
    )

