"""The in-memory :class:`Dataset` and its preprocessing."""

from __future__ import annotations

from collections.abc import Sequence
from typing import Literal, Self

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class Dataset(BaseModel):
    """Images ``N×C×H×W`` and integer labels in ``[0, classes)``."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    name: str
    split: Literal["train", "test"]
    images: np.ndarray
    labels: np.ndarray
    classes: int = Field(..., ge=2)
    normalized: bool = False

    @model_validator(mode="after")
    def check_arrays(self) -> Self:
        if self.images.ndim != 4 or self.images.shape[0] == 0:
            msg = f"images must be a non-empty N×C×H×W array, got {self.images.shape}"
            raise ValueError(msg)
        if self.labels.shape != (self.images.shape[0],):
            msg = f"{self.labels.shape[0]} labels for {self.images.shape[0]} images"
            raise ValueError(msg)
        if self.labels.min() < 0 or self.labels.max() >= self.classes:
            msg = f"labels must lie in [0, {self.classes})"
            raise ValueError(msg)
        self.images.setflags(write=False)
        self.labels.setflags(write=False)
        return self

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    @property
    def image_shape(self) -> tuple[int, int, int]:
        c, h, w = self.images.shape[1:]
        return (int(c), int(h), int(w))

    def head(self, limit: int | None) -> Dataset:
        """Keep the first ``limit`` samples (file order)."""
        if limit is None or limit >= len(self):
            return self
        return self.model_copy(
            update={"images": self.images[:limit], "labels": self.labels[:limit]}
        )


def normalize(dataset: Dataset, mean: Sequence[float], std: Sequence[float]) -> Dataset:
    """Per-channel ``(x - mean) / std``; a normalized dataset is returned unchanged."""
    if dataset.normalized:
        return dataset
    dtype = dataset.images.dtype
    m = np.asarray(mean, dtype=dtype).reshape(1, -1, 1, 1)
    s = np.asarray(std, dtype=dtype).reshape(1, -1, 1, 1)
    images = (dataset.images - m) / s
    images.setflags(write=False)
    return dataset.model_copy(update={"images": images, "normalized": True})


def to_unit_range(pixels: np.ndarray) -> np.ndarray:
    """Scale raw bytes to float32 values in [0, 1]."""
    return pixels.astype(np.float32) / np.float32(255.0)
