"""Client-side optimization loops and model evaluation."""

from __future__ import annotations

import logging
from collections.abc import Iterator

import numpy as np

from src.config import settings
from src.data.datasets import Dataset
from src.exceptions import ConfigurationError, DimensionError
from src.models.experiment import Hyperparams
from src.models.partition import ClientData
from src.networks.layers import Model
from src.operations.losses import (
    add_proximal_gradient,
    cross_entropy,
    fml_local_loss,
    fml_meme_loss,
)
from src.tensor import SGD, Tensor, current_tape, no_grad
from src.tensor import functional as F

logger = logging.getLogger(__name__)


def make_optimizer(
    model: Model,
    hp: Hyperparams,
    *,
    learning_rate: float | None = None,
    state: dict[str, np.ndarray] | None = None,
) -> SGD:
    """SGD over every parameter of ``model``, optionally resuming momentum buffers."""
    optimizer = SGD(
        model.named_parameters(),
        lr=hp.learning_rate if learning_rate is None else learning_rate,
        momentum=hp.momentum,
        weight_decay=hp.weight_decay,
    )
    if state:
        optimizer.load_state_dict(state)
    return optimizer


def iter_batches(
    indices: np.ndarray, batch_size: int, rng: np.random.Generator
) -> Iterator[np.ndarray]:
    """One epoch of shuffled mini-batches; the last one may be short."""
    order = indices[rng.permutation(indices.size)]
    for start in range(0, order.size, batch_size):
        yield order[start : start + batch_size]


def _batch(dataset: Dataset, idx: np.ndarray, dtype: np.dtype) -> tuple[Tensor, np.ndarray]:
    return Tensor(dataset.images[idx].astype(dtype, copy=False)), dataset.labels[idx]


def _check_fingerprint(model: Model, expected: str | None) -> None:
    if expected is not None and model.fingerprint("shared") != expected:
        msg = (
            f"model architecture {model.fingerprint('shared')} does not match "
            f"the global model {expected}"
        )
        raise DimensionError(msg)


def _check_shard(data: ClientData) -> None:
    if data.num_train == 0:
        msg = f"client {data.client_id} received an empty training shard"
        raise ConfigurationError("partition", msg)


def local_update_sgd(
    model: Model,
    data: ClientData,
    train: Dataset,
    hp: Hyperparams,
    rng: np.random.Generator,
    *,
    optimizer: SGD | None = None,
    fingerprint: str | None = None,
) -> Model:
    """``hp.local_epochs`` epochs of mini-batch SGD on the client's shard, in place.

    With ``fingerprint`` the model must match that shared-scope architecture.
    """
    _check_fingerprint(model, fingerprint)
    return _sgd_epochs(model, data, train, hp, rng, optimizer, anchor=None)


def local_update_prox(
    model: Model,
    global_params: np.ndarray,
    data: ClientData,
    train: Dataset,
    hp: Hyperparams,
    rng: np.random.Generator,
    *,
    optimizer: SGD | None = None,
    fingerprint: str | None = None,
) -> Model:
    """SGD on ``F_k(w) + (μ/2)‖w − w_global‖²``; ``μ = 0`` is plain SGD."""
    _check_fingerprint(model, fingerprint)
    return _sgd_epochs(model, data, train, hp, rng, optimizer, anchor=global_params)


def _sgd_epochs(
    model: Model,
    data: ClientData,
    train: Dataset,
    hp: Hyperparams,
    rng: np.random.Generator,
    optimizer: SGD | None,
    anchor: np.ndarray | None,
) -> Model:
    _check_shard(data)
    opt = optimizer or make_optimizer(model, hp)
    tape = current_tape()
    tape.clear()
    for _ in range(hp.local_epochs):
        for idx in iter_batches(data.train_indices, hp.batch_size, rng):
            x, y = _batch(train, idx, model.dtype)
            opt.zero_grad()
            loss = cross_entropy(model(x), y)
            tape.backward(loss)
            if anchor is not None:
                add_proximal_gradient(model, anchor, hp.mu)
            opt.step()
    return model


def local_update_dml(
    meme: Model,
    local: Model,
    data: ClientData,
    train: Dataset,
    hp: Hyperparams,
    rng: np.random.Generator,
    alpha: float,
    beta: float,
    *,
    meme_optimizer: SGD | None = None,
    local_optimizer: SGD | None = None,
    fingerprint: str | None = None,
) -> tuple[Model, Model]:
    """Mutual learning between the meme and the personalized model, in place.

    Both models see the same batches in the same order. In ``simultaneous`` mode
    each batch is forwarded once through both models and both are stepped from
    those logits. In ``alternating`` mode the personalized model steps first and
    the meme then distills from its updated predictions.
    """
    if meme.output_shape != local.output_shape:
        msg = (
            f"meme outputs {meme.output_shape} classes but the personalized model "
            f"outputs {local.output_shape}"
        )
        raise ConfigurationError("client_models", msg)
    _check_fingerprint(meme, fingerprint)
    _check_shard(data)
    meme_opt = meme_optimizer or make_optimizer(meme, hp)
    local_opt = local_optimizer or make_optimizer(local, hp)
    tau = hp.distill.temperature
    tape = current_tape()
    tape.clear()
    for _ in range(hp.local_epochs):
        for idx in iter_batches(data.train_indices, hp.batch_size, rng):
            x, y = _batch(train, idx, meme.dtype)
            meme_opt.zero_grad()
            local_opt.zero_grad()
            if hp.dml_mode == "simultaneous":
                meme_logits = meme(x)
                local_logits = local(x)
                loss = F.add(
                    fml_local_loss(local_logits, meme_logits, y, alpha, tau),
                    fml_meme_loss(meme_logits, local_logits, y, beta, tau),
                )
                tape.backward(loss)
            else:
                with no_grad():
                    meme_logits = meme(x)
                tape.backward(fml_local_loss(local(x), meme_logits, y, alpha, tau))
                local_opt.step()
                with no_grad():
                    local_logits = local(x)
                tape.backward(fml_meme_loss(meme(x), local_logits, y, beta, tau))
                meme_opt.step()
                continue
            local_opt.step()
            meme_opt.step()
    return meme, local


def predict_logits(model: Model, dataset: Dataset, indices: np.ndarray | None = None) -> np.ndarray:
    """Forward a dataset (or an index subset of it) in evaluation batches."""
    idx = np.arange(len(dataset)) if indices is None else np.asarray(indices, dtype=np.int64)
    chunks: list[np.ndarray] = []
    with no_grad():
        for start in range(0, idx.size, settings.eval_batch_size):
            x, _ = _batch(dataset, idx[start : start + settings.eval_batch_size], model.dtype)
            chunks.append(model(x).data)
    if not chunks:
        return np.zeros((0, *model.output_shape), dtype=model.dtype)
    return np.concatenate(chunks)


def evaluate(
    model: Model, dataset: Dataset, indices: np.ndarray | None = None
) -> tuple[float, float]:
    """Top-1 accuracy and mean cross-entropy, without recording gradients.

    Argmax ties resolve to the lowest class index. An empty index set scores
    ``(0.0, 0.0)``.
    """
    if model.output_shape[0] < dataset.classes:
        msg = f"model emits {model.output_shape[0]} classes, dataset has {dataset.classes}"
        raise DimensionError(msg)
    idx = np.arange(len(dataset)) if indices is None else np.asarray(indices, dtype=np.int64)
    if idx.size == 0:
        return 0.0, 0.0
    logits = predict_logits(model, dataset, idx)
    labels = dataset.labels[idx]
    accuracy = float(np.mean(np.argmax(logits, axis=1) == labels))
    with no_grad():
        loss = cross_entropy(Tensor(logits.astype(np.float64)), labels).item()
    return accuracy, loss
