"""Deterministic Gaussian-blob dataset used by tests and desk-scale presets."""

from __future__ import annotations

from typing import Literal

import numpy as np

from src.data.datasets import Dataset
from src.exceptions import DimensionError, ParameterError

DEFAULT_SPREAD = 0.5


def synth_dataset(
    seed: int,
    n: int,
    classes: int,
    dim: int,
    *,
    shape: tuple[int, int, int] | None = None,
    spread: float = DEFAULT_SPREAD,
    split: Literal["train", "test"] = "train",
) -> Dataset:
    """Class-conditional Gaussian blobs.

    Class means are drawn once per ``seed`` and shared by both splits; each split
    draws its own balanced labels and noise. At the default spread the classes are
    linearly separable.

    Args:
        seed: Seed of the means and of both splits.
        n: Number of samples.
        classes: Number of classes (every class appears when ``n >= classes``).
        dim: Number of features per sample.
        shape: Per-sample ``C×H×W`` layout of the features; ``(1, 1, dim)`` if omitted.
        spread: Standard deviation of the noise around each mean.
        split: Which split to draw.
    """
    if n < classes:
        msg = f"need at least one sample per class, got n={n} for {classes} classes"
        raise ParameterError(msg)
    shape = shape or (1, 1, dim)
    if int(np.prod(shape)) != dim:
        msg = f"shape {shape} does not hold {dim} features"
        raise DimensionError(msg)

    means_seq, train_seq, test_seq = np.random.SeedSequence(seed).spawn(3)
    means = np.random.default_rng(means_seq).normal(0.0, 1.0, size=(classes, dim))
    rng = np.random.default_rng(train_seq if split == "train" else test_seq)
    labels = rng.permutation(np.arange(n) % classes)
    features = means[labels] + spread * rng.standard_normal((n, dim))
    return Dataset(
        name="synthetic",
        split=split,
        images=features.astype(np.float32).reshape(n, *shape),
        labels=labels.astype(np.int64),
        classes=classes,
        normalized=True,
    )
