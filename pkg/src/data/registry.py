"""Resolve a dataset spec to loaded train/test splits."""

from __future__ import annotations

from functools import lru_cache
from pathlib import Path

from pydantic import TypeAdapter

from src.data.cifar import load_cifar10, load_cifar100
from src.data.datasets import Dataset
from src.data.mnist import load_mnist
from src.data.synthetic import synth_dataset
from src.models.experiment import DatasetSpec, RealDatasetSpec, SyntheticDatasetSpec

# Sub-directories of the data root, named after the official archives
DATA_SUBDIRS = {
    "mnist": "mnist",
    "cifar10": "cifar-10-batches-bin",
    "cifar100": "cifar-100-binary",
}

_spec_adapter: TypeAdapter[RealDatasetSpec | SyntheticDatasetSpec] = TypeAdapter(DatasetSpec)


def load_dataset(
    spec: RealDatasetSpec | SyntheticDatasetSpec, data_dir: Path
) -> tuple[Dataset, Dataset]:
    """Load (train, test) for a spec; results are cached per spec and root."""
    return _load_cached(spec.model_dump_json(), str(data_dir))


@lru_cache(maxsize=8)
def _load_cached(spec_json: str, data_dir: str) -> tuple[Dataset, Dataset]:
    spec = _spec_adapter.validate_json(spec_json)
    if isinstance(spec, SyntheticDatasetSpec):
        dim = spec.image_shape[0] * spec.image_shape[1] * spec.image_shape[2]

        def draw(n: int, split: str) -> Dataset:
            return synth_dataset(
                spec.seed,
                n,
                spec.classes,
                dim,
                shape=spec.image_shape,
                spread=spec.spread,
                split=split,  # type: ignore[arg-type]
            )

        return draw(spec.train_size, "train"), draw(spec.test_size, "test")

    loaders = {"mnist": load_mnist, "cifar10": load_cifar10, "cifar100": load_cifar100}
    train, test = loaders[spec.name](Path(data_dir) / DATA_SUBDIRS[spec.name])
    return train.head(spec.train_limit), test.head(spec.test_limit)
