"""Model zoo, parameter vectors and trunk/head surgery."""

from __future__ import annotations

import logging

import numpy as np

from src.exceptions import ConfigurationError, DimensionError, UsageError
from src.models.experiment import LayerSpec, ModelSpec
from src.networks.layers import (
    Conv3x3,
    Flatten,
    Layer,
    Linear,
    MaxPool2x2,
    Model,
    ReLU,
    Scope,
    Shape,
)

logger = logging.getLogger(__name__)

MLP_HIDDEN = 200
CNN1_HIDDEN = 120
CNN2_CHANNELS = 128


class _Builder:
    """Appends layers while tracking the running per-sample shape."""

    def __init__(self, input_shape: Shape, rng: np.random.Generator, dtype: type[np.floating]):
        self.shape: Shape = tuple(input_shape)
        self.rng = rng
        self.dtype = dtype
        self.layers: list[Layer] = []

    def _push(self, layer: Layer) -> None:
        self.shape = layer.output_shape(self.shape)
        self.layers.append(layer)

    def conv(self, out_channels: int, padding: int = 0) -> None:
        if len(self.shape) != 3:
            msg = f"conv layer needs a C×H×W input, got {self.shape}"
            raise DimensionError(msg)
        conv = Conv3x3(self.shape[0], out_channels, self.rng, padding=padding, dtype=self.dtype)
        self._push(conv)

    def pool(self) -> None:
        self._push(MaxPool2x2())

    def relu(self) -> None:
        self._push(ReLU())

    def flatten(self) -> None:
        self._push(Flatten())

    def linear(self, out_features: int) -> None:
        if len(self.shape) != 1:
            self.flatten()
        self._push(Linear(self.shape[0], out_features, self.rng, dtype=self.dtype))


def _mlp(b: _Builder, spec: ModelSpec, classes: int) -> None:
    width = spec.hidden_width or MLP_HIDDEN
    b.flatten()
    b.linear(width)
    b.relu()
    b.linear(width)
    b.relu()
    b.linear(classes)


def _lenet5(b: _Builder, spec: ModelSpec, classes: int) -> None:
    b.conv(6, padding=1)
    b.relu()
    b.pool()
    b.conv(16)
    b.relu()
    b.pool()
    b.flatten()
    b.linear(120)
    b.relu()
    b.linear(84)
    b.relu()
    b.linear(classes)


def _cnn1(b: _Builder, spec: ModelSpec, classes: int) -> None:
    b.conv(6)
    b.pool()
    b.relu()
    b.conv(16)
    b.pool()
    b.relu()
    b.flatten()
    b.linear(spec.hidden_width or CNN1_HIDDEN)
    b.relu()
    b.linear(classes)


def _cnn2(b: _Builder, spec: ModelSpec, classes: int) -> None:
    for _ in range(3):
        b.conv(CNN2_CHANNELS, padding=1)
        b.pool()
        b.relu()
    b.flatten()
    b.linear(classes)


def _custom(b: _Builder, spec: ModelSpec, classes: int) -> None:
    for layer in spec.layers:
        _push_custom(b, layer)
    if b.shape != (classes,):
        msg = f"custom layers end in shape {b.shape}, expected ({classes},)"
        raise ConfigurationError("layers", msg)


def _push_custom(b: _Builder, layer: LayerSpec) -> None:
    match layer.kind:
        case "conv3x3":
            assert layer.out is not None
            b.conv(layer.out, padding=layer.padding)
        case "maxpool2x2":
            b.pool()
        case "relu":
            b.relu()
        case "flatten":
            b.flatten()
        case "linear":
            assert layer.out is not None
            b.linear(layer.out)


_ARCHITECTURES = {
    "mlp": _mlp,
    "lenet5": _lenet5,
    "cnn1": _cnn1,
    "cnn2": _cnn2,
    "custom": _custom,
}


def build_model(
    spec: ModelSpec,
    rng_seed: int,
    *,
    dtype: type[np.floating] = np.float32,
) -> Model:
    """Build and initialize a zoo architecture.

    Weights use Kaiming-uniform fan-in scaling, biases start at zero; the same
    seed always yields bit-identical parameters.

    Args:
        spec: Architecture, input shape and class count.
        rng_seed: Seed of the initialization stream.
        dtype: Parameter precision (float64 for gradient checks).

    Returns:
        The full model (no split applied; see :func:`split_model`).

    Raises:
        DimensionError: If the input is too small for the conv stack.
        ConfigurationError: If the spec lacks shapes or its split point is invalid.
    """
    if spec.input_shape is None or spec.num_classes is None:
        msg = "input_shape and num_classes must be resolved before building"
        raise ConfigurationError("model", msg)
    builder = _Builder(spec.input_shape, np.random.default_rng(rng_seed), dtype)
    _ARCHITECTURES[spec.architecture](builder, spec, spec.num_classes)
    if spec.logit_relu:
        builder.relu()
    model = Model(builder.layers, spec.input_shape, name=spec.architecture)
    if spec.split_point is not None and not 0 < spec.split_point < len(model):
        msg = f"split point {spec.split_point} is not inside 1..{len(model) - 1}"
        raise ConfigurationError("split_point", msg)
    logger.debug("built %r with %d parameters", model, model.num_parameters())
    return model


def flatten_params(model: Model, scope: Scope = "all") -> np.ndarray:
    """Concatenate parameters into one vector, in ``named_parameters`` order."""
    params = model.named_parameters(scope)
    if not params:
        return np.zeros(0, dtype=model.dtype)
    return np.concatenate([t.data.ravel() for _, t in params])


def load_params(model: Model, vector: np.ndarray, scope: Scope = "all") -> Model:
    """Write a parameter vector back into the model, in place."""
    params = model.named_parameters(scope)
    expected = sum(t.size for _, t in params)
    if vector.ndim != 1 or vector.size != expected:
        msg = f"parameter vector has {vector.size} entries, model expects {expected}"
        raise DimensionError(msg)
    offset = 0
    for _, tensor in params:
        chunk = vector[offset : offset + tensor.size]
        tensor.data[...] = chunk.reshape(tensor.shape)
        offset += tensor.size
    return model


def split_model(model: Model, split_point: int) -> tuple[Model, Model]:
    """Split into a trunk (layers before ``split_point``) and a head.

    Both halves reuse the original layer objects, so
    ``head(trunk(x))`` equals ``model(x)`` exactly.
    """
    if not 0 < split_point < len(model):
        msg = f"split point {split_point} is not inside 1..{len(model) - 1}"
        raise UsageError(msg)
    trunk = Model(model.layers[:split_point], model.input_shape, name=f"{model.name}-trunk")
    head = Model(model.layers[split_point:], trunk.output_shape, name=f"{model.name}-head")
    return trunk, head


def join_models(trunk: Model, head: Model) -> Model:
    """Concatenate a trunk and a head back into one model."""
    if head.input_shape != trunk.output_shape:
        msg = f"head expects {head.input_shape}, trunk produces {trunk.output_shape}"
        raise DimensionError(msg)
    name = trunk.name.removesuffix("-trunk")
    return Model(trunk.layers + head.layers, trunk.input_shape, name=name)


def splice_adaptor(trunk: Model, num_classes: int, rng_seed: int) -> Model:
    """Append a freshly initialized FC adaptor to a trunk.

    The trunk layers stay shared (they are aggregated); the adaptor is local-only
    and never part of ``flatten_params(model, "shared")``.
    """
    rng = np.random.default_rng(rng_seed)
    adaptor: list[Layer] = []
    features: Shape = trunk.output_shape
    if len(features) != 1:
        adaptor.append(Flatten())
        features = adaptor[-1].output_shape(features)
    adaptor.append(Linear(features[0], num_classes, rng, dtype=trunk.dtype.type))
    return Model(
        trunk.layers + adaptor,
        trunk.input_shape,
        shared_depth=len(trunk.layers),
        name=f"{trunk.name.removesuffix('-trunk')}+adaptor{num_classes}",
    )
