"""CIFAR-10 / CIFAR-100 binary readers.

CIFAR-10 records are 3073 bytes (label, 3072 pixels) spread over
``data_batch_{1..5}.bin`` and ``test_batch.bin``. CIFAR-100 records are 3074 bytes
(coarse label, fine label, 3072 pixels) in ``train.bin`` and ``test.bin``; the fine
label is used.
"""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from src.config import normalization_stats
from src.data.datasets import Dataset, normalize, to_unit_range
from src.data.mnist import read_bytes
from src.exceptions import DatasetFormatError

logger = logging.getLogger(__name__)

PIXELS = 3 * 32 * 32


def read_cifar_records(
    path: Path, *, label_bytes: int, label_index: int, classes: int
) -> tuple[np.ndarray, np.ndarray]:
    """Parse fixed-size records into ``N×3×32×32`` pixels and labels."""
    raw = read_bytes(path)
    record = label_bytes + PIXELS
    if not raw or len(raw) % record:
        raise DatasetFormatError(
            path,
            len(raw) - len(raw) % record,
            f"size {len(raw)} is not a multiple of the {record}-byte record",
        )
    rows = np.frombuffer(raw, dtype=np.uint8).reshape(-1, record)
    labels = rows[:, label_index]
    bad = np.flatnonzero(labels >= classes)
    if bad.size:
        raise DatasetFormatError(
            path, int(bad[0]) * record + label_index, f"label {labels[bad[0]]} out of range"
        )
    return rows[:, label_bytes:].reshape(-1, 3, 32, 32), labels


def _build(
    name: str, split: str, parts: list[tuple[np.ndarray, np.ndarray]], classes: int
) -> Dataset:
    images = np.concatenate([p[0] for p in parts])
    labels = np.concatenate([p[1] for p in parts])
    dataset = Dataset(
        name=name,
        split=split,  # type: ignore[arg-type]
        images=to_unit_range(images),
        labels=labels.astype(np.int64),
        classes=classes,
    )
    mean, std = normalization_stats.for_dataset(name)
    return normalize(dataset, mean, std)


def load_cifar10(directory: Path) -> tuple[Dataset, Dataset]:
    """Load CIFAR-10 from ``cifar-10-batches-bin``."""
    directory = Path(directory)

    def read(file: str) -> tuple[np.ndarray, np.ndarray]:
        return read_cifar_records(directory / file, label_bytes=1, label_index=0, classes=10)

    train = _build("cifar10", "train", [read(f"data_batch_{i}.bin") for i in range(1, 6)], 10)
    test = _build("cifar10", "test", [read("test_batch.bin")], 10)
    logger.info("loaded CIFAR-10: %d train, %d test", len(train), len(test))
    return train, test


def load_cifar100(directory: Path) -> tuple[Dataset, Dataset]:
    """Load CIFAR-100 (fine labels) from ``cifar-100-binary``."""
    directory = Path(directory)

    def read(file: str) -> tuple[np.ndarray, np.ndarray]:
        return read_cifar_records(directory / file, label_bytes=2, label_index=1, classes=100)

    train = _build("cifar100", "train", [read("train.bin")], 100)
    test = _build("cifar100", "test", [read("test.bin")], 100)
    logger.info("loaded CIFAR-100: %d train, %d test", len(train), len(test))
    return train, test
