"""Catalogue of named experiments.

Full-scale presets use the published setup (5 clients, 200 rounds, 5 local
epochs, batch 128). Desk-scale variants (``-desk``) run a quarter of the rounds
and change nothing else.
"""

from __future__ import annotations

from typing import Any, NamedTuple

from src.models.experiment import ExperimentConfig
from src.models.preset import Preset

FULL_ROUNDS = 200
DESK_ROUNDS = 50

_DATASET_LABELS = {"mnist": "MNIST", "cifar10": "CIFAR10", "cifar100": "CIFAR100"}
_MODEL_LABELS = {"mlp": "MLP", "lenet5": "LeNet5", "cnn1": "CNN1", "cnn2": "CNN2"}
_STRATEGY_LABELS = {"fedavg": "FedAvg", "fedprox": "FedProx", "fml": "FML"}

# Published global-model top-1 accuracy (%) per (dataset, model) column, setting and method
_GLOBAL_ACCURACY: dict[tuple[str, str], dict[str, dict[str, float]]] = {
    ("mnist", "mlp"): {
        "iid": {"fedavg": 98.44, "fedprox": 98.14, "fml": 98.49},
        "noniid1": {"fedavg": 97.40, "fedprox": 97.35, "fml": 97.70},
        "noniid2": {"fedavg": 96.84, "fedprox": 96.98, "fml": 97.00},
        "noniid3": {"fedavg": 90.46, "fedprox": 80.03, "fml": 93.77},
    },
    ("mnist", "lenet5"): {
        "iid": {"fedavg": 99.29, "fedprox": 99.13, "fml": 99.37},
        "noniid1": {"fedavg": 98.92, "fedprox": 98.75, "fml": 99.07},
        "noniid2": {"fedavg": 98.67, "fedprox": 98.50, "fml": 98.71},
        "noniid3": {"fedavg": 96.45, "fedprox": 87.55, "fml": 96.70},
    },
    ("cifar10", "cnn1"): {
        "iid": {"fedavg": 85.90, "fedprox": 83.91, "fml": 85.93},
        "noniid1": {"fedavg": 80.41, "fedprox": 77.46, "fml": 80.86},
        "noniid2": {"fedavg": 78.85, "fedprox": 76.53, "fml": 78.64},
        "noniid3": {"fedavg": 63.22, "fedprox": 58.07, "fml": 62.42},
    },
    ("cifar10", "cnn2"): {
        "iid": {"fedavg": 87.49, "fedprox": 86.15, "fml": 87.41},
        "noniid1": {"fedavg": 82.64, "fedprox": 80.88, "fml": 82.69},
        "noniid2": {"fedavg": 81.17, "fedprox": 78.87, "fml": 80.85},
        "noniid3": {"fedavg": 64.12, "fedprox": 62.01, "fml": 66.75},
    },
    ("cifar100", "cnn1"): {
        "iid": {"fedavg": 56.11, "fedprox": 32.41, "fml": 57.11},
        "noniid1": {"fedavg": 53.77, "fedprox": 47.83, "fml": 54.21},
        "noniid2": {"fedavg": 50.86, "fedprox": 45.46, "fml": 52.92},
        "noniid3": {"fedavg": 41.48, "fedprox": 41.29, "fml": 46.30},
    },
    ("cifar100", "cnn2"): {
        "iid": {"fedavg": 60.88, "fedprox": 59.23, "fml": 62.50},
        "noniid1": {"fedavg": 57.76, "fedprox": 55.60, "fml": 59.77},
        "noniid2": {"fedavg": 56.82, "fedprox": 55.34, "fml": 55.93},
        "noniid3": {"fedavg": 50.36, "fedprox": 49.51, "fml": 51.86},
    },
}

# Shards per client of the Non-IID levels; 100-class data uses ten times as many
_SHARDS = {"noniid1": 6, "noniid2": 4, "noniid3": 2}
_SETTING_LABELS = {
    "iid": "IID",
    "noniid1": "Non-IID(1)",
    "noniid2": "Non-IID(2)",
    "noniid3": "Non-IID(3)",
}

_SYNTHETIC_CONV = {
    "name": "synthetic",
    "classes": 10,
    "image_shape": [1, 12, 12],
    "train_size": 2000,
    "test_size": 500,
}

DATA_HETEROGENEITY = "data heterogeneity study: personalized vs global accuracy on private data"
MODEL_HETEROGENEITY = "model heterogeneity study: FML vs independent training per architecture"
OBJECTIVE_HETEROGENEITY = "objective heterogeneity study: tasks of different class counts"
CATFISH = "catfish study: one high-capacity client among low-capacity ones"
NO_ANCHOR = "none (smoke test)"


class _Entry(NamedTuple):
    name: str
    anchor: str
    description: str
    config: dict[str, Any]


def grid_anchor(dataset: str, model: str, setting: str, strategy: str) -> str:
    """Anchor of a benchmark-grid cell: its coordinates and published global accuracy."""
    accuracy = _GLOBAL_ACCURACY[(dataset, model)][setting][strategy]
    return (
        f"accuracy grid: {_DATASET_LABELS[dataset]} / {_MODEL_LABELS[model]} / "
        f"{_SETTING_LABELS[setting]} / {_STRATEGY_LABELS[strategy]} = {accuracy:.2f}"
    )


def _partition(dataset: str, setting: str) -> dict[str, Any]:
    if setting == "iid":
        return {"clients": 5, "mode": "iid"}
    shards = _SHARDS[setting] * (10 if dataset == "cifar100" else 1)
    return {"clients": 5, "mode": "noniid", "shards_per_client": shards}


def _grid_cell(dataset: str, model: str, setting: str, strategy: str) -> _Entry:
    name = f"{dataset}-{model}-{setting}-{strategy}"
    accuracy = _GLOBAL_ACCURACY[(dataset, model)][setting][strategy]
    description = (
        f"published global top-1 {accuracy:.2f} "
        f"({_DATASET_LABELS[dataset]}, {_MODEL_LABELS[model]}, "
        f"{_SETTING_LABELS[setting]}, {_STRATEGY_LABELS[strategy]})"
    )
    config: dict[str, Any] = {
        "name": name,
        "dataset": {"name": dataset},
        "partition": _partition(dataset, setting),
        "strategy": strategy,
        "global_model": {"architecture": model},
        "evaluation": {"global_on_validate": setting != "iid"},
    }
    return _Entry(name, grid_anchor(dataset, model, setting, strategy), description, config)


def _heterogeneity() -> list[_Entry]:
    mixed = [{"architecture": a} for a in ("mlp", "lenet5", "cnn1", "cnn2", "cnn2")]
    model_het = {
        "dataset": {"name": "cifar10"},
        "partition": {"clients": 5, "mode": "iid"},
        "global_model": {"architecture": "lenet5"},
        "client_models": mixed,
    }
    # The shared trunk is the conv stack of CNN2; each task splices its own adaptor
    objective_het = {
        "dataset": {"name": "cifar10"},
        "client_datasets": [{"name": "cifar10"}, {"name": "cifar100"}],
        "partition": {"clients": 2, "mode": "iid"},
        "global_model": {"architecture": "cnn2", "split_point": 9},
        "client_models": [{"architecture": "lenet5"}, {"architecture": "cnn1"}],
    }
    data_het = {
        "dataset": {"name": "mnist"},
        "partition": {"clients": 5, "mode": "noniid", "shards_per_client": 2},
        "global_model": {"architecture": "mlp"},
        "evaluation": {"global_on_validate": True, "memes": True},
    }
    sardines = [{"architecture": "cnn1"} for _ in range(5)]
    catfish = [{"architecture": "cnn2"}, *sardines[1:]]
    sardine_base = {
        "dataset": {"name": "cifar10"},
        "partition": {"clients": 5, "mode": "iid"},
        "global_model": {"architecture": "cnn1"},
    }
    return [
        _Entry(
            "dh-mnist-mlp-fml",
            DATA_HETEROGENEITY,
            "personalized vs global accuracy on private data (MNIST, MLP, Non-IID(3))",
            {**data_het, "strategy": "fml"},
        ),
        _Entry(
            "dh-mnist-mlp-fedavg",
            DATA_HETEROGENEITY,
            "global accuracy on private data, FedAvg reference (MNIST, MLP, Non-IID(3))",
            {**data_het, "strategy": "fedavg", "evaluation": {"global_on_validate": True}},
        ),
        _Entry(
            "dh-mnist-mlp-fedprox",
            DATA_HETEROGENEITY,
            "global accuracy on private data, FedProx reference (MNIST, MLP, Non-IID(3))",
            {**data_het, "strategy": "fedprox", "evaluation": {"global_on_validate": True}},
        ),
        _Entry(
            "mh-cifar10-fml",
            MODEL_HETEROGENEITY,
            "MLP, LeNet5, CNN1 and 2xCNN2 clients around a LeNet5 global model (CIFAR10, IID)",
            {**model_het, "strategy": "fml"},
        ),
        _Entry(
            "mh-cifar10-solo",
            MODEL_HETEROGENEITY,
            "baseline: the same five models trained independently (CIFAR10, IID)",
            {**model_het, "strategy": "solo"},
        ),
        _Entry(
            "oh-cifar-fml",
            OBJECTIVE_HETEROGENEITY,
            "10- and 100-class clients sharing the CNN2 conv trunk through adaptors "
            "(CIFAR10 / CIFAR100)",
            {**objective_het, "strategy": "fml"},
        ),
        _Entry(
            "oh-cifar-solo",
            OBJECTIVE_HETEROGENEITY,
            "baseline: LeNet5 on CIFAR10 and CNN1 on CIFAR100 trained independently",
            {**objective_het, "strategy": "solo"},
        ),
        _Entry(
            "catfish-cifar10-fml",
            CATFISH,
            "one CNN2 client among four CNN1 clients (CIFAR10, IID)",
            {**sardine_base, "client_models": catfish, "strategy": "fml"},
        ),
        _Entry(
            "sardines-cifar10-fml",
            CATFISH,
            "control: five CNN1 clients (CIFAR10, IID)",
            {**sardine_base, "client_models": sardines, "strategy": "fml"},
        ),
    ]


def _synthetic() -> list[_Entry]:
    flat = {"name": "synthetic", "classes": 5, "train_size": 1000, "test_size": 500}
    small = {"rounds": 10, "local_epochs": 2, "batch_size": 32, "learning_rate": 0.05}
    conv_models = [{"architecture": a} for a in ("mlp", "lenet5", "cnn1", "cnn2", "cnn2")]
    return [
        _Entry(
            "synthetic-mlp-iid-fedavg",
            NO_ANCHOR,
            "FedAvg on separable synthetic data",
            {"dataset": flat, "strategy": "fedavg", "hyperparams": small},
        ),
        _Entry(
            "synthetic-mlp-noniid-fml",
            NO_ANCHOR,
            "personalized vs global accuracy on label-sharded synthetic data",
            {
                "dataset": flat,
                "partition": {"clients": 5, "mode": "noniid", "shards_per_client": 1},
                "strategy": "fml",
                "hyperparams": small,
                "evaluation": {"global_on_validate": True, "memes": True},
            },
        ),
        _Entry(
            "synthetic-mh-fml",
            NO_ANCHOR,
            "mixed client architectures on synthetic images",
            {
                "dataset": _SYNTHETIC_CONV,
                "global_model": {"architecture": "lenet5"},
                "client_models": conv_models,
                "strategy": "fml",
                "hyperparams": small,
            },
        ),
        _Entry(
            "synthetic-oh-fml",
            NO_ANCHOR,
            "10- and 5-class synthetic tasks sharing a conv trunk",
            {
                "dataset": _SYNTHETIC_CONV,
                "client_datasets": [_SYNTHETIC_CONV, {**_SYNTHETIC_CONV, "classes": 5, "seed": 1}],
                "partition": {"clients": 2, "mode": "iid"},
                "global_model": {"architecture": "cnn1", "split_point": 6},
                "client_models": [{"architecture": "lenet5"}, {"architecture": "mlp"}],
                "strategy": "fml",
                "hyperparams": small,
            },
        ),
    ]


def _with_rounds(config: dict[str, Any], rounds: int) -> dict[str, Any]:
    hyperparams = {**config.get("hyperparams", {}), "rounds": rounds}
    return {**config, "hyperparams": hyperparams}


def _preset(entry: _Entry, name: str, description: str, config: dict[str, Any]) -> Preset:
    return Preset(
        name=name,
        anchor=entry.anchor,
        description=description,
        config=ExperimentConfig.model_validate({**config, "name": name}),
    )


def _build_catalogue() -> dict[str, Preset]:
    entries = [
        _grid_cell(dataset, model, setting, strategy)
        for (dataset, model), cells in _GLOBAL_ACCURACY.items()
        for setting, methods in cells.items()
        for strategy in methods
    ]
    entries.extend(_heterogeneity())

    catalogue: dict[str, Preset] = {}
    for entry in entries:
        catalogue[entry.name] = _preset(
            entry, entry.name, entry.description, _with_rounds(entry.config, FULL_ROUNDS)
        )
        desk = f"{entry.name}-desk"
        catalogue[desk] = _preset(
            entry,
            desk,
            f"desk scale ({DESK_ROUNDS} of {FULL_ROUNDS} rounds); {entry.description}",
            _with_rounds(entry.config, DESK_ROUNDS),
        )
    for entry in _synthetic():
        catalogue[entry.name] = _preset(entry, entry.name, entry.description, entry.config)
    return catalogue


presets_db: dict[str, Preset] = _build_catalogue()
