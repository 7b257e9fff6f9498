"""Dataset loaders, synthetic data and the preset catalogue."""

from .datasets import Dataset, normalize, to_unit_range
from .presets import presets_db
from .registry import DATA_SUBDIRS, load_dataset
from .synthetic import synth_dataset

__all__ = [
    "DATA_SUBDIRS",
    "Dataset",
    "load_dataset",
    "normalize",
    "presets_db",
    "synth_dataset",
    "to_unit_range",
]
