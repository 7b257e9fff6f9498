import math

import numpy as np
import pytest

from src.exceptions import DimensionError, ParameterError
from src.models.experiment import DistillConfig, ModelSpec
from src.networks import build_model, flatten_params
from src.operations.losses import (
    add_proximal_gradient,
    cross_entropy,
    fml_local_loss,
    fml_meme_loss,
    kl_divergence,
    proximal_penalty,
    schedule_alphabeta,
)
from src.tensor import Tensor, parameter


def test_cross_entropy_uniform_logits():
    loss = cross_entropy(Tensor(np.zeros((4, 10))), np.array([0, 3, 5, 9]))
    assert loss.item() == pytest.approx(math.log(10), abs=1e-6)


def test_cross_entropy_confident_logits():
    logits = np.zeros((1, 10))
    logits[0, 0] = 10.0
    loss = cross_entropy(Tensor(logits), np.array([0]))
    assert loss.item() == pytest.approx(math.log1p(9 * math.exp(-10)), rel=1e-6)
    assert loss.item() == pytest.approx(4.086e-4, rel=1e-3)


def test_cross_entropy_gradient_is_softmax_minus_onehot():
    z = parameter(np.array([[1.0, 2.0, 0.5]]))
    cross_entropy(z, np.array([1])).backward()
    p = np.exp(z.data) / np.exp(z.data).sum()
    np.testing.assert_allclose(z.grad, p - np.array([[0.0, 1.0, 0.0]]))


def test_cross_entropy_argument_errors():
    with pytest.raises(DimensionError):
        cross_entropy(Tensor(np.zeros((2, 3))), np.array([0]))
    with pytest.raises(ParameterError):
        cross_entropy(Tensor(np.zeros((2, 3))), np.array([0, 3]))


def test_kl_against_saturated_teacher():
    teacher = Tensor(np.array([[50.0, -50.0]]))
    student = Tensor(np.zeros((1, 2)))
    assert kl_divergence(teacher, student).item() == pytest.approx(math.log(2), abs=1e-6)


def test_kl_worked_value():
    teacher = Tensor(np.array([[math.log(3), 0.0]]))
    student = Tensor(np.zeros((1, 2)))
    expected = 0.75 * math.log(1.5) + 0.25 * math.log(0.5)
    assert kl_divergence(teacher, student).item() == pytest.approx(expected, abs=1e-9)
    assert expected == pytest.approx(0.13081, abs=1e-5)


def test_kl_of_identical_distributions_is_zero():
    z = np.random.default_rng(0).standard_normal((5, 7))
    assert kl_divergence(Tensor(z), Tensor(z.copy())).item() == pytest.approx(0.0, abs=1e-9)


def test_kl_is_non_negative():
    rng = np.random.default_rng(1)
    for _ in range(5):
        a, b = rng.standard_normal((2, 3, 4))
        assert kl_divergence(Tensor(a), Tensor(b), temperature=2.0).item() >= 0.0


def test_kl_sends_no_gradient_to_teacher():
    teacher = parameter(np.array([[1.0, 0.0, -1.0]]))
    student = parameter(np.zeros((1, 3)))
    kl_divergence(teacher, student).backward()
    assert teacher.grad is None
    assert student.grad is not None


def test_kl_temperature_scaling():
    teacher = Tensor(np.array([[2.0, 0.0]]))
    student = Tensor(np.zeros((1, 2)))
    scaled = kl_divergence(teacher, student, temperature=2.0).item()
    # τ = 2 halves the teacher logits and multiplies by τ²
    plain = kl_divergence(Tensor(np.array([[1.0, 0.0]])), student).item()
    assert scaled == pytest.approx(4.0 * plain)


def test_fml_local_loss_is_affine_in_alpha():
    rng = np.random.default_rng(2)
    local = Tensor(rng.standard_normal((3, 4)))
    meme = Tensor(rng.standard_normal((3, 4)))
    y = np.array([0, 1, 3])
    ce = cross_entropy(local, y).item()
    kl = kl_divergence(meme, local).item()

    for alpha in (0.0, 0.25, 0.5, 1.0):
        value = fml_local_loss(local, meme, y, alpha).item()
        assert value == pytest.approx(alpha * ce + (1 - alpha) * kl, abs=1e-12)


def test_fml_meme_loss_endpoints():
    rng = np.random.default_rng(3)
    meme = Tensor(rng.standard_normal((2, 3)))
    local = Tensor(rng.standard_normal((2, 3)))
    y = np.array([2, 0])
    assert fml_meme_loss(meme, local, y, 1.0).item() == cross_entropy(meme, y).item()
    assert fml_meme_loss(meme, local, y, 0.0).item() == kl_divergence(local, meme).item()


def test_fml_losses_only_train_their_own_logits():
    local = parameter(np.array([[0.3, -0.2]]))
    meme = parameter(np.array([[-0.5, 0.1]]))
    fml_local_loss(local, meme, np.array([0]), 0.5).backward()
    assert meme.grad is None
    assert local.grad is not None


def test_fml_weight_range():
    z = Tensor(np.zeros((1, 2)))
    with pytest.raises(ParameterError):
        fml_local_loss(z, z, np.array([0]), 1.5)
    with pytest.raises(ParameterError):
        fml_meme_loss(z, z, np.array([0]), -0.1)


def test_constant_schedule():
    config = DistillConfig(alpha=0.3, beta=0.7)
    assert schedule_alphabeta(0, 10, config) == (0.3, 0.7)
    assert schedule_alphabeta(10, 10, config) == (0.3, 0.7)


def test_linear_schedule_interpolates():
    config = DistillConfig(schedule="linear", alpha=0.0, beta=1.0, alpha_end=1.0, beta_end=0.0)
    assert schedule_alphabeta(0, 4, config) == (0.0, 1.0)
    assert schedule_alphabeta(1, 4, config) == pytest.approx((0.25, 0.75))
    assert schedule_alphabeta(4, 4, config) == pytest.approx((1.0, 0.0))
    # A single-round run has nothing to interpolate
    assert schedule_alphabeta(0, 0, config) == (0.0, 1.0)


def test_linear_schedule_step_out_of_range():
    config = DistillConfig(schedule="linear", alpha_end=1.0)
    with pytest.raises(ParameterError):
        schedule_alphabeta(5, 4, config)


def test_proximal_gradient_and_penalty():
    spec = ModelSpec(architecture="mlp", input_shape=(1, 1, 4), num_classes=2, hidden_width=3)
    model = build_model(spec, rng_seed=0, dtype=np.float64)
    w = flatten_params(model)
    anchor = w - 0.5

    assert proximal_penalty(model, anchor, mu=2.0) == pytest.approx(0.5 * 2.0 * 0.25 * w.size)

    add_proximal_gradient(model, anchor, mu=2.0)
    grads = np.concatenate([t.grad.ravel() for _, t in model.named_parameters()])
    np.testing.assert_allclose(grads, 1.0)


def test_proximal_gradient_with_zero_mu_is_a_no_op():
    spec = ModelSpec(architecture="mlp", input_shape=(1, 1, 4), num_classes=2, hidden_width=3)
    model = build_model(spec, rng_seed=0)
    add_proximal_gradient(model, np.zeros(1), mu=0.0)
    assert all(t.grad is None for _, t in model.named_parameters())


def test_proximal_anchor_length_is_checked():
    spec = ModelSpec(architecture="mlp", input_shape=(1, 1, 4), num_classes=2, hidden_width=3)
    model = build_model(spec, rng_seed=0)
    with pytest.raises(DimensionError):
        add_proximal_gradient(model, np.zeros(3), mu=0.1)
    with pytest.raises(DimensionError):
        proximal_penalty(model, np.zeros(3), mu=0.1)
