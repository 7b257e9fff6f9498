"""MNIST IDX reader.

Layout of ``<dir>``: ``train-images-idx3-ubyte``, ``train-labels-idx1-ubyte``,
``t10k-images-idx3-ubyte``, ``t10k-labels-idx1-ubyte`` (each optionally gzipped
with a ``.gz`` suffix).
"""

from __future__ import annotations

import gzip
import logging
import struct
from pathlib import Path

import numpy as np

from src.config import normalization_stats
from src.data.datasets import Dataset, normalize, to_unit_range
from src.exceptions import DatasetFormatError

logger = logging.getLogger(__name__)

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
NUM_CLASSES = 10

_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}


def read_bytes(path: Path) -> bytes:
    """Read a file, falling back to its gzipped sibling."""
    if path.exists():
        return path.read_bytes()
    gz = path.with_name(path.name + ".gz")
    if gz.exists():
        return gzip.decompress(gz.read_bytes())
    raise DatasetFormatError(path, 0, "file not found")


def read_idx_images(path: Path) -> np.ndarray:
    """Parse an IDX3 image file into an ``N×rows×cols`` uint8 array."""
    raw = read_bytes(path)
    if len(raw) < 16:
        raise DatasetFormatError(path, len(raw), "truncated header")
    magic, count, rows, cols = struct.unpack_from(">IIII", raw, 0)
    if magic != IMAGE_MAGIC:
        raise DatasetFormatError(path, 0, f"bad magic 0x{magic:08x}, expected 0x{IMAGE_MAGIC:08x}")
    expected = 16 + count * rows * cols
    if len(raw) != expected:
        raise DatasetFormatError(
            path, min(len(raw), expected), f"expected {expected} bytes, found {len(raw)}"
        )
    return np.frombuffer(raw, dtype=np.uint8, offset=16).reshape(count, rows, cols)


def read_idx_labels(path: Path) -> np.ndarray:
    """Parse an IDX1 label file into a uint8 vector."""
    raw = read_bytes(path)
    if len(raw) < 8:
        raise DatasetFormatError(path, len(raw), "truncated header")
    magic, count = struct.unpack_from(">II", raw, 0)
    if magic != LABEL_MAGIC:
        raise DatasetFormatError(path, 0, f"bad magic 0x{magic:08x}, expected 0x{LABEL_MAGIC:08x}")
    if len(raw) != 8 + count:
        raise DatasetFormatError(
            path, min(len(raw), 8 + count), f"expected {8 + count} bytes, found {len(raw)}"
        )
    labels = np.frombuffer(raw, dtype=np.uint8, offset=8)
    bad = np.flatnonzero(labels >= NUM_CLASSES)
    if bad.size:
        raise DatasetFormatError(path, 8 + int(bad[0]), f"label {labels[bad[0]]} out of range")
    return labels


def _load_split(directory: Path, split: str) -> Dataset:
    image_file, label_file = _FILES[split]
    images = read_idx_images(directory / image_file)
    labels = read_idx_labels(directory / label_file)
    if images.shape[0] != labels.shape[0]:
        raise DatasetFormatError(
            directory / label_file,
            4,
            f"{labels.shape[0]} labels for {images.shape[0]} images",
        )
    dataset = Dataset(
        name="mnist",
        split=split,  # type: ignore[arg-type]
        images=to_unit_range(images)[:, None, :, :],
        labels=labels.astype(np.int64),
        classes=NUM_CLASSES,
    )
    mean, std = normalization_stats.for_dataset("mnist")
    return normalize(dataset, mean, std)


def load_mnist(directory: Path) -> tuple[Dataset, Dataset]:
    """Load the MNIST train and test splits.

    Raises:
        DatasetFormatError: On a bad magic number or a length mismatch; nothing is
            returned for a partially valid directory.
    """
    directory = Path(directory)
    train = _load_split(directory, "train")
    test = _load_split(directory, "test")
    logger.info("loaded MNIST: %d train, %d test", len(train), len(test))
    return train, test
