import numpy as np
import pytest

from src.models.experiment import ModelSpec
from src.networks import build_model
from src.operations.gradcheck import (
    GRADCHECK_TOLERANCE,
    check_model,
    relative_error,
    run_suite,
)


def test_relative_error():
    assert relative_error(1.0, 1.0) == 0.0
    assert relative_error(1.0, 3.0) == pytest.approx(0.5)
    # Both near zero: the floor keeps the ratio finite
    assert relative_error(0.0, 1e-11) < GRADCHECK_TOLERANCE


def test_mlp_gradients_match_finite_differences():
    spec = ModelSpec(architecture="mlp", input_shape=(1, 1, 6), num_classes=3, hidden_width=5)
    model = build_model(spec, rng_seed=0, dtype=np.float64)
    rng = np.random.default_rng(0)
    x = rng.standard_normal((4, 1, 1, 6))

    checked, worst = check_model(model, x, np.array([0, 1, 2, 1]), samples=30)

    assert checked == 30
    assert worst < GRADCHECK_TOLERANCE


def test_mutual_loss_gradients_match_finite_differences():
    spec = ModelSpec(architecture="mlp", input_shape=(1, 1, 6), num_classes=3, hidden_width=5)
    model = build_model(spec, rng_seed=1, dtype=np.float64)
    rng = np.random.default_rng(1)
    x = rng.standard_normal((3, 1, 1, 6))

    _, worst = check_model(
        model, x, np.array([2, 0, 1]), samples=20, teacher_logits=rng.standard_normal((3, 3))
    )

    assert worst < GRADCHECK_TOLERANCE


def test_samples_are_capped_by_parameter_count():
    spec = ModelSpec(architecture="mlp", input_shape=(1, 1, 2), num_classes=2, hidden_width=1)
    model = build_model(spec, rng_seed=0, dtype=np.float64)
    checked, _ = check_model(model, np.ones((1, 1, 1, 2)), np.array([0]), samples=1000)
    assert checked == model.num_parameters()


def test_suite_covers_every_architecture():
    results = run_suite(seeds=(0,), samples=4)
    assert [r.name for r in results] == ["mlp", "lenet5", "cnn1", "cnn2", "mlp+mutual"]
    assert all(r.passed for r in results)
