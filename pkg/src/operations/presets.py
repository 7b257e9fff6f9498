"""Preset lookup and resolution of what the CLI was asked to run."""

from __future__ import annotations

from pathlib import Path

from src.data.presets import presets_db
from src.exceptions import PresetNotFoundError, UsageError
from src.models.experiment import ExperimentConfig
from src.models.preset import Preset
from src.operations.reporting import parse_config, validate_config


def list_presets() -> list[Preset]:
    return sorted(presets_db.values(), key=lambda p: p.name)


def get_preset(name: str) -> Preset:
    """Retrieve a preset by name.

    Raises:
        PresetNotFoundError: If no preset has that name.
    """
    if name not in presets_db:
        raise PresetNotFoundError(name)
    return presets_db[name]


def with_seed(config: ExperimentConfig, seed: int) -> ExperimentConfig:
    """Re-seed training and partitioning; the result is validated again."""
    data = config.model_dump(mode="json")
    data["hyperparams"]["seed"] = seed
    data["partition"]["seed"] = seed
    return validate_config(data)


def resolve_experiment(
    target: str | None,
    config_path: Path | None = None,
    *,
    seed: int | None = None,
) -> ExperimentConfig:
    """Turn a preset name or config file (positional or ``--config``) into a config.

    A positional target naming an existing file is parsed as a config; anything
    else is looked up in the preset catalogue.

    Raises:
        UsageError: If neither or both of ``target`` and ``config_path`` are given.
        PresetNotFoundError: If ``target`` is neither a file nor a preset.
        ConfigurationError: If the config file is invalid.
    """
    if (target is None) == (config_path is None):
        msg = "give exactly one preset name or config file"
        raise UsageError(msg)
    if config_path is not None:
        config = parse_config(config_path)
    else:
        assert target is not None
        path = Path(target)
        config = parse_config(path) if path.is_file() else get_preset(target).config
    return config if seed is None else with_seed(config, seed)
