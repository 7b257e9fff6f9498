"""Finite-difference verification of the reverse-mode gradients."""

from __future__ import annotations

import logging
from collections.abc import Sequence

import numpy as np
from pydantic import BaseModel

from src.models.experiment import CIFAR_SHAPE, MNIST_SHAPE, Architecture, ModelSpec
from src.networks.layers import Model
from src.networks.zoo import build_model
from src.operations.losses import cross_entropy, fml_local_loss
from src.tensor import Tensor, current_tape, no_grad

logger = logging.getLogger(__name__)

GRADCHECK_TOLERANCE = 1e-4
EPSILON = 1e-5

# Architectures and the input shapes they are checked on
SUITE: dict[Architecture, tuple[int, int, int]] = {
    "mlp": MNIST_SHAPE,
    "lenet5": MNIST_SHAPE,
    "cnn1": CIFAR_SHAPE,
    "cnn2": CIFAR_SHAPE,
}


class GradcheckResult(BaseModel):
    name: str
    seed: int
    checked: int
    max_rel_error: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error < GRADCHECK_TOLERANCE


def relative_error(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(abs(analytic) + abs(numeric), 1e-6)


def check_model(
    model: Model,
    x: np.ndarray,
    labels: np.ndarray,
    *,
    samples: int = 50,
    seed: int = 0,
    teacher_logits: np.ndarray | None = None,
    alpha: float = 0.5,
) -> tuple[int, float]:
    """Compare backprop against central differences on sampled parameter entries.

    With ``teacher_logits`` the loss is the mutual-learning loss of the model
    against that fixed teacher, otherwise plain cross-entropy.

    Returns:
        Number of entries checked and the largest relative error.
    """
    inputs = Tensor(x)

    def loss_of() -> Tensor:
        logits = model(inputs)
        if teacher_logits is None:
            return cross_entropy(logits, labels)
        return fml_local_loss(logits, Tensor(teacher_logits), labels, alpha)

    model.zero_grad()
    current_tape().backward(loss_of())

    slots = [
        (tensor, i) for _, tensor in model.named_parameters() for i in range(tensor.size)
    ]
    rng = np.random.default_rng(seed)
    picks = rng.choice(len(slots), size=min(samples, len(slots)), replace=False)
    worst = 0.0
    with no_grad():
        for p in picks:
            tensor, i = slots[p]
            assert tensor.grad is not None
            flat = tensor.data.reshape(-1)
            original = flat[i]
            flat[i] = original + EPSILON
            plus = loss_of().item()
            flat[i] = original - EPSILON
            minus = loss_of().item()
            flat[i] = original
            numeric = (plus - minus) / (2 * EPSILON)
            worst = max(worst, relative_error(float(tensor.grad.reshape(-1)[i]), numeric))
    return int(picks.size), worst


def run_suite(
    seeds: Sequence[int] = (0, 1, 2), *, samples: int = 50, batch: int = 2
) -> list[GradcheckResult]:
    """Check every zoo architecture plus the mutual-learning loss, in float64."""
    results: list[GradcheckResult] = []
    for seed in seeds:
        rng = np.random.default_rng(seed)
        for arch, shape in SUITE.items():
            spec = ModelSpec(architecture=arch, input_shape=shape, num_classes=10)
            model = build_model(spec, seed, dtype=np.float64)
            x = rng.standard_normal((batch, *shape))
            y = rng.integers(0, 10, size=batch)
            checked, worst = check_model(model, x, y, samples=samples, seed=seed)
            results.append(
                GradcheckResult(name=arch, seed=seed, checked=checked, max_rel_error=worst)
            )
            logger.debug("%s seed %d: max relative error %.3e", arch, seed, worst)

        spec = ModelSpec(architecture="mlp", input_shape=MNIST_SHAPE, num_classes=10)
        model = build_model(spec, seed, dtype=np.float64)
        x = rng.standard_normal((batch, *MNIST_SHAPE))
        y = rng.integers(0, 10, size=batch)
        teacher = rng.standard_normal((batch, 10))
        checked, worst = check_model(
            model, x, y, samples=samples, seed=seed, teacher_logits=teacher
        )
        results.append(
            GradcheckResult(name="mlp+mutual", seed=seed, checked=checked, max_rel_error=worst)
        )
    return results
