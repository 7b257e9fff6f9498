"""Layers and the sequential :class:`Model`."""

from __future__ import annotations

import copy
import hashlib
from typing import Literal

import numpy as np

from src.exceptions import DimensionError
from src.tensor import Tensor, parameter
from src.tensor import functional as F

Scope = Literal["all", "shared", "local"]
Shape = tuple[int, ...]


class Layer:
    """A stage of a sequential model."""

    kind = "layer"

    def parameters(self) -> list[tuple[str, Tensor]]:
        return []

    def output_shape(self, input_shape: Shape) -> Shape:
        return input_shape

    def describe(self) -> str:
        return self.kind

    def forward(self, x: Tensor) -> Tensor:
        raise NotImplementedError

    def __call__(self, x: Tensor) -> Tensor:
        return self.forward(x)


def _kaiming_uniform(
    rng: np.random.Generator, shape: Shape, fan_in: int, dtype: type[np.floating]
) -> np.ndarray:
    bound = np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


class Linear(Layer):
    kind = "linear"

    def __init__(
        self,
        in_features: int,
        out_features: int,
        rng: np.random.Generator,
        dtype: type[np.floating] = np.float32,
    ) -> None:
        self.in_features = in_features
        self.out_features = out_features
        shape = (in_features, out_features)
        self.weight = parameter(_kaiming_uniform(rng, shape, in_features, dtype))
        self.bias = parameter(np.zeros(out_features, dtype=dtype))

    def parameters(self) -> list[tuple[str, Tensor]]:
        return [("weight", self.weight), ("bias", self.bias)]

    def output_shape(self, input_shape: Shape) -> Shape:
        if input_shape != (self.in_features,):
            msg = f"linear layer expects ({self.in_features},), got {input_shape}"
            raise DimensionError(msg)
        return (self.out_features,)

    def describe(self) -> str:
        return f"linear({self.in_features}->{self.out_features})"

    def forward(self, x: Tensor) -> Tensor:
        return F.add(F.matmul(x, self.weight), self.bias)


class Conv3x3(Layer):
    kind = "conv3x3"

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        rng: np.random.Generator,
        *,
        padding: int = 0,
        dtype: type[np.floating] = np.float32,
    ) -> None:
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.padding = padding
        fan_in = in_channels * 9
        self.weight = parameter(
            _kaiming_uniform(rng, (out_channels, in_channels, 3, 3), fan_in, dtype)
        )
        self.bias = parameter(np.zeros(out_channels, dtype=dtype))

    def parameters(self) -> list[tuple[str, Tensor]]:
        return [("weight", self.weight), ("bias", self.bias)]

    def output_shape(self, input_shape: Shape) -> Shape:
        if len(input_shape) != 3 or input_shape[0] != self.in_channels:
            msg = f"conv layer expects ({self.in_channels}, H, W), got {input_shape}"
            raise DimensionError(msg)
        _, h, w = input_shape
        out_h, out_w = h + 2 * self.padding - 2, w + 2 * self.padding - 2
        if out_h < 1 or out_w < 1:
            msg = f"input {input_shape} too small for the conv stack"
            raise DimensionError(msg)
        return (self.out_channels, out_h, out_w)

    def describe(self) -> str:
        return f"conv3x3({self.in_channels}->{self.out_channels},p{self.padding})"

    def forward(self, x: Tensor) -> Tensor:
        return F.conv2d(x, self.weight, self.bias, padding=self.padding)


class MaxPool2x2(Layer):
    kind = "maxpool2x2"

    def output_shape(self, input_shape: Shape) -> Shape:
        if len(input_shape) != 3 or min(input_shape[1:]) < 2:
            msg = f"input {input_shape} too small for the conv stack"
            raise DimensionError(msg)
        c, h, w = input_shape
        return (c, h // 2, w // 2)

    def forward(self, x: Tensor) -> Tensor:
        return F.maxpool2x2(x)


class ReLU(Layer):
    kind = "relu"

    def forward(self, x: Tensor) -> Tensor:
        return F.relu(x)


class Flatten(Layer):
    kind = "flatten"

    def output_shape(self, input_shape: Shape) -> Shape:
        return (int(np.prod(input_shape)),)

    def forward(self, x: Tensor) -> Tensor:
        return F.flatten(x)


class Model:
    """Ordered sequence of layers with named parameter slots.

    The first ``shared_depth`` layers form the part of the model that takes part in
    aggregation; the rest (an adaptor, for instance) stays on the client.
    """

    def __init__(
        self,
        layers: list[Layer],
        input_shape: Shape,
        *,
        shared_depth: int | None = None,
        name: str = "model",
    ) -> None:
        self.layers = list(layers)
        self.input_shape = tuple(input_shape)
        self.shared_depth = len(self.layers) if shared_depth is None else shared_depth
        self.name = name
        shape = self.input_shape
        for layer in self.layers:
            shape = layer.output_shape(shape)
        self.output_shape = shape

    def __len__(self) -> int:
        return len(self.layers)

    def forward(self, x: Tensor) -> Tensor:
        for layer in self.layers:
            x = layer(x)
        return x

    __call__ = forward

    def _layer_range(self, scope: Scope) -> range:
        if scope == "shared":
            return range(self.shared_depth)
        if scope == "local":
            return range(self.shared_depth, len(self.layers))
        return range(len(self.layers))

    def named_parameters(self, scope: Scope = "all") -> list[tuple[str, Tensor]]:
        """Parameters in a stable order, named ``<layer index>.<slot>``."""
        return [
            (f"{i}.{slot}", tensor)
            for i in self._layer_range(scope)
            for slot, tensor in self.layers[i].parameters()
        ]

    def num_parameters(self, scope: Scope = "all") -> int:
        return sum(t.size for _, t in self.named_parameters(scope))

    def fingerprint(self, scope: Scope = "all") -> str:
        """Hash of the input shape and layer shapes; equal fingerprints aggregate."""
        parts = [f"input{self.input_shape}"]
        parts.extend(self.layers[i].describe() for i in self._layer_range(scope))
        return hashlib.sha256("|".join(parts).encode()).hexdigest()[:16]

    @property
    def dtype(self) -> np.dtype:
        params = self.named_parameters()
        return params[0][1].dtype if params else np.dtype(np.float32)

    def zero_grad(self) -> None:
        for _, tensor in self.named_parameters():
            tensor.zero_grad()

    def clone(self) -> Model:
        """Deep copy with independent parameter storage."""
        twin = copy.deepcopy(self)
        twin.zero_grad()
        return twin

    def __repr__(self) -> str:
        body = ", ".join(layer.describe() for layer in self.layers)
        return f"Model({self.name}: {body})"
