"""Model zoo: MLP, LeNet5, CNN1, CNN2 and custom sequential models."""

from .layers import Conv3x3, Flatten, Layer, Linear, MaxPool2x2, Model, ReLU
from .zoo import (
    build_model,
    flatten_params,
    join_models,
    load_params,
    splice_adaptor,
    split_model,
)

__all__ = [
    "Conv3x3",
    "Flatten",
    "Layer",
    "Linear",
    "MaxPool2x2",
    "Model",
    "ReLU",
    "build_model",
    "flatten_params",
    "join_models",
    "load_params",
    "splice_adaptor",
    "split_model",
]
