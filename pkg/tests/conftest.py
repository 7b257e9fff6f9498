"""Shared fixtures: small synthetic datasets and experiment configs."""

from collections.abc import Callable
from typing import Any

import pytest

from src.data.datasets import Dataset
from src.data.synthetic import synth_dataset
from src.models.experiment import ExperimentConfig


@pytest.fixture
def blobs() -> tuple[Dataset, Dataset]:
    """Four separable classes, 8 features, 200 train / 80 test samples."""
    return (
        synth_dataset(0, 200, 4, 8, split="train"),
        synth_dataset(0, 80, 4, 8, split="test"),
    )


def _merge(base: dict[str, Any], overrides: dict[str, Any]) -> dict[str, Any]:
    out = dict(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


@pytest.fixture
def make_config() -> Callable[..., ExperimentConfig]:
    """Build a fast synthetic experiment; keyword arguments are merged into the tree."""

    def factory(**overrides: Any) -> ExperimentConfig:
        base: dict[str, Any] = {
            "name": "test",
            "dataset": {
                "name": "synthetic",
                "classes": 5,
                "image_shape": [1, 1, 16],
                "train_size": 300,
                "test_size": 100,
            },
            "partition": {"clients": 3, "mode": "iid"},
            "strategy": "fedavg",
            "global_model": {"architecture": "mlp", "hidden_width": 16},
            "hyperparams": {
                "rounds": 2,
                "local_epochs": 1,
                "batch_size": 32,
                "learning_rate": 0.05,
            },
        }
        return ExperimentConfig.model_validate(_merge(base, overrides))

    return factory
