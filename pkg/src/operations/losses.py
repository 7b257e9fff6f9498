"""Cross-entropy, distillation and mutual-learning losses."""

from __future__ import annotations

import numpy as np

from src.exceptions import DimensionError, ParameterError
from src.models.experiment import DistillConfig
from src.networks.layers import Model
from src.tensor import Tensor, no_grad
from src.tensor import functional as F


def cross_entropy(logits: Tensor, labels: np.ndarray) -> Tensor:
    """Mean over the batch of ``-log softmax(logits)[label]``."""
    labels = np.asarray(labels, dtype=np.int64)
    if logits.ndim != 2 or labels.shape != (logits.shape[0],):
        msg = f"cross_entropy expects B×C logits and B labels, got {logits.shape}, {labels.shape}"
        raise DimensionError(msg)
    if labels.size and (labels.min() < 0 or labels.max() >= logits.shape[1]):
        msg = f"labels must lie in [0, {logits.shape[1]})"
        raise ParameterError(msg)
    picked = F.gather(F.log_softmax(logits), labels)
    return F.scale(F.mean(picked), -1.0)


def kl_divergence(
    teacher_logits: Tensor, student_logits: Tensor, temperature: float = 1.0
) -> Tensor:
    """``KL(p_teacher ‖ p_student)`` of the temperature softmaxes, averaged over the batch.

    The teacher is a constant: no gradient reaches its logits. For ``τ ≠ 1`` the
    value is multiplied by ``τ²`` to keep gradient magnitudes comparable.
    """
    if teacher_logits.shape != student_logits.shape or student_logits.ndim != 2:
        msg = f"kl_divergence shape mismatch: {teacher_logits.shape} vs {student_logits.shape}"
        raise DimensionError(msg)
    with no_grad():
        log_p_teacher = F.log_softmax(teacher_logits.detach(), temperature)
    p_teacher = Tensor(np.exp(log_p_teacher.data))
    log_p_student = F.log_softmax(student_logits, temperature)
    per_class = F.mul(p_teacher, F.sub(log_p_teacher, log_p_student))
    factor = 1.0 / student_logits.shape[0]
    if temperature != 1.0:
        factor *= temperature**2
    return F.scale(F.sum(per_class), factor)


def _check_weight(name: str, weight: float) -> None:
    if not 0.0 <= weight <= 1.0:
        msg = f"{name} must lie in [0, 1], got {weight}"
        raise ParameterError(msg)


def _mutual_loss(
    student_logits: Tensor,
    teacher_logits: Tensor,
    labels: np.ndarray,
    weight: float,
    temperature: float,
) -> Tensor:
    # Endpoints skip the unused term so they match the pure losses bit for bit
    if weight == 1.0:
        return cross_entropy(student_logits, labels)
    kl = kl_divergence(teacher_logits, student_logits, temperature)
    if weight == 0.0:
        return kl
    return F.add(
        F.scale(cross_entropy(student_logits, labels), weight),
        F.scale(kl, 1.0 - weight),
    )


def fml_local_loss(
    local_logits: Tensor,
    meme_logits: Tensor,
    labels: np.ndarray,
    alpha: float,
    temperature: float = 1.0,
) -> Tensor:
    """``α·CE(local) + (1−α)·KL(p_meme ‖ p_local)``; only the local logits get gradient."""
    _check_weight("alpha", alpha)
    return _mutual_loss(local_logits, meme_logits, labels, alpha, temperature)


def fml_meme_loss(
    meme_logits: Tensor,
    local_logits: Tensor,
    labels: np.ndarray,
    beta: float,
    temperature: float = 1.0,
) -> Tensor:
    """``β·CE(meme) + (1−β)·KL(p_local ‖ p_meme)``; only the meme logits get gradient."""
    _check_weight("beta", beta)
    return _mutual_loss(meme_logits, local_logits, labels, beta, temperature)


def schedule_alphabeta(t: int, T: int, config: DistillConfig) -> tuple[float, float]:
    """Mutual-learning weights at step ``t`` of ``T``.

    The constant policy returns ``(α, β)``; the linear policy interpolates from
    ``(α, β)`` at ``t = 0`` to ``(α_end, β_end)`` at ``t = T``.
    """
    if config.schedule == "constant" or T <= 0:
        return config.alpha, config.beta
    if not 0 <= t <= T:
        msg = f"schedule step {t} outside 0..{T}"
        raise ParameterError(msg)
    assert config.alpha_end is not None
    assert config.beta_end is not None
    frac = t / T
    alpha = config.alpha + frac * (config.alpha_end - config.alpha)
    beta = config.beta + frac * (config.beta_end - config.beta)
    return alpha, beta


def add_proximal_gradient(model: Model, anchor: np.ndarray, mu: float) -> None:
    """Add ``μ·(w − w_anchor)`` to every gradient.

    This is the gradient of the proximal penalty ``(μ/2)‖w − w_anchor‖²``.
    """
    if mu == 0.0:
        return
    params = model.named_parameters()
    expected = sum(t.size for _, t in params)
    if anchor.size != expected:
        msg = f"anchor has {anchor.size} entries, model has {expected}"
        raise DimensionError(msg)
    offset = 0
    for _, tensor in params:
        ref = anchor[offset : offset + tensor.size].reshape(tensor.shape)
        offset += tensor.size
        prox = (mu * (tensor.data - ref)).astype(tensor.dtype, copy=False)
        tensor.grad = prox if tensor.grad is None else tensor.grad + prox


def proximal_penalty(model: Model, anchor: np.ndarray, mu: float) -> float:
    """Value of ``(μ/2)‖w − w_anchor‖²``."""
    params = np.concatenate([t.data.ravel() for _, t in model.named_parameters()])
    if params.size != anchor.size:
        msg = f"anchor has {anchor.size} entries, model has {params.size}"
        raise DimensionError(msg)
    diff = params.astype(np.float64) - anchor
    return 0.5 * mu * float(diff @ diff)
