import threading

import numpy as np
import pytest

from src.exceptions import DimensionError, NumericalError, ParameterError, UsageError
from src.tensor import SGD, Tensor, current_tape, no_grad, parameter
from src.tensor import functional as F


def test_integer_data_becomes_float():
    t = Tensor([1, 2, 3])
    assert t.dtype == np.float64
    assert Tensor(np.zeros(2, dtype=np.float32)).dtype == np.float32


def test_linear_layer_gradients():
    """Gradients of sum(x @ W + b) are column sums of x and the batch size."""
    x = Tensor(np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]))
    w = parameter(np.arange(6.0).reshape(3, 2))
    b = parameter(np.zeros(2))

    F.sum(F.add(F.matmul(x, w), b)).backward()

    np.testing.assert_array_equal(w.grad, [[5.0, 5.0], [7.0, 7.0], [9.0, 9.0]])
    np.testing.assert_array_equal(b.grad, [2.0, 2.0])
    assert x.grad is None


def test_gradients_accumulate_until_zeroed():
    w = parameter(np.array([2.0]))
    F.sum(F.mul(w, w)).backward()
    F.sum(F.mul(w, w)).backward()
    np.testing.assert_array_equal(w.grad, [8.0])

    w.zero_grad()
    assert w.grad is None


def test_relu_masks_negative_inputs():
    a = parameter(np.array([-1.0, 0.0, 2.0]))
    out = F.relu(a)
    np.testing.assert_array_equal(out.data, [0.0, 0.0, 2.0])

    F.sum(out).backward()
    np.testing.assert_array_equal(a.grad, [0.0, 0.0, 1.0])


@pytest.mark.parametrize("padding", [0, 1])
def test_conv2d_matches_direct_loops(padding):
    rng = np.random.default_rng(0)
    x = rng.standard_normal((2, 3, 6, 5))
    k = rng.standard_normal((4, 3, 3, 3))
    bias = rng.standard_normal(4)

    out = F.conv2d(Tensor(x), Tensor(k), Tensor(bias), padding=padding)
    expected = F.conv2d_reference(x, k, bias, padding=padding)

    assert out.shape == expected.shape
    np.testing.assert_allclose(out.data, expected, rtol=1e-10, atol=1e-10)


def test_conv2d_stride_matches_direct_loops():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((1, 2, 7, 7))
    k = rng.standard_normal((3, 2, 3, 3))

    out = F.conv2d(Tensor(x), Tensor(k), stride=2)
    np.testing.assert_allclose(out.data, F.conv2d_reference(x, k, stride=2), atol=1e-10)


def test_conv2d_backward_is_exact_for_linear_loss():
    """The loss sum(g * conv(x, k)) is linear in x and k, so unit perturbations are exact."""
    rng = np.random.default_rng(2)
    x = rng.standard_normal((2, 2, 5, 5))
    k = rng.standard_normal((3, 2, 3, 3))
    g = rng.standard_normal((2, 3, 5, 5))

    xt, kt = parameter(x.copy()), parameter(k.copy())
    F.sum(F.mul(F.conv2d(xt, kt, padding=1), Tensor(g))).backward()

    def loss(xv: np.ndarray, kv: np.ndarray) -> float:
        return float((F.conv2d_reference(xv, kv, padding=1) * g).sum())

    base = loss(x, k)
    for idx in [(0, 0, 0, 0), (1, 1, 2, 3), (0, 1, 4, 4)]:
        bumped = x.copy()
        bumped[idx] += 1.0
        assert xt.grad[idx] == pytest.approx(loss(bumped, k) - base, abs=1e-9)
    for idx in [(0, 0, 0, 0), (2, 1, 1, 2)]:
        bumped = k.copy()
        bumped[idx] += 1.0
        assert kt.grad[idx] == pytest.approx(loss(x, bumped) - base, abs=1e-9)


def test_conv2d_rejects_bad_arguments():
    x = Tensor(np.zeros((1, 3, 5, 5)))
    with pytest.raises(DimensionError):
        F.conv2d(x, Tensor(np.zeros((2, 3, 5, 5))))
    with pytest.raises(DimensionError):
        F.conv2d(x, Tensor(np.zeros((2, 1, 3, 3))))
    with pytest.raises(ParameterError):
        F.conv2d(x, Tensor(np.zeros((2, 3, 3, 3))), padding=2)
    with pytest.raises(DimensionError):
        F.conv2d(Tensor(np.zeros((1, 3, 2, 2))), Tensor(np.zeros((2, 3, 3, 3))))


def test_maxpool_tie_goes_to_first_element():
    x = parameter(np.ones((1, 1, 2, 2)))
    out = F.maxpool2x2(x)
    assert out.data.shape == (1, 1, 1, 1)

    F.sum(out).backward()
    np.testing.assert_array_equal(x.grad[0, 0], [[1.0, 0.0], [0.0, 0.0]])


def test_maxpool_drops_odd_row_and_column():
    x = np.arange(9.0).reshape(1, 1, 3, 3)
    out = F.maxpool2x2(Tensor(x))
    np.testing.assert_array_equal(out.data, [[[[4.0]]]])


def test_log_softmax_is_stable_for_large_logits():
    out = F.log_softmax(Tensor(np.array([[1000.0, 0.0]])))
    np.testing.assert_allclose(out.data, [[0.0, -1000.0]])


def test_softmax_temperature():
    z = Tensor(np.array([[np.log(4.0), 0.0]]))
    np.testing.assert_allclose(F.softmax_temp(z, 2.0).data, [[2 / 3, 1 / 3]])

    e = np.e
    np.testing.assert_allclose(
        F.softmax_temp(Tensor(np.array([2.0, 0.0])), 2.0).data, [e / (e + 1), 1 / (e + 1)]
    )

    with pytest.raises(ParameterError):
        F.softmax_temp(z, 0.0)
    with pytest.raises(ParameterError):
        F.log_softmax(z, -1.0)


def test_gather_routes_gradient_to_picked_entries():
    a = parameter(np.arange(6.0).reshape(2, 3))
    picked = F.gather(a, np.array([2, 0]))
    np.testing.assert_array_equal(picked.data, [2.0, 3.0])

    F.sum(picked).backward()
    np.testing.assert_array_equal(a.grad, [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])


def test_no_grad_records_nothing():
    tape = current_tape()
    tape.clear()
    w = parameter(np.ones(3))
    with no_grad():
        out = F.sum(F.mul(w, w))
    assert not out.requires_grad
    assert len(tape) == 0


def test_backward_errors():
    w = parameter(np.ones(3))
    with pytest.raises(UsageError):
        F.mul(w, w).backward()
    with pytest.raises(UsageError):
        Tensor(np.array(1.0)).backward()
    with pytest.raises(UsageError):
        Tensor(np.ones(2)).item()


def test_non_finite_forward_is_rejected():
    with np.errstate(over="ignore"), pytest.raises(NumericalError):
        F.scale(Tensor(np.array([1e308])), 10.0)


def test_shape_mismatch_errors():
    with pytest.raises(DimensionError):
        F.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))
    with pytest.raises(DimensionError):
        F.add(Tensor(np.ones((2, 3))), Tensor(np.ones(2)))
    with pytest.raises(DimensionError):
        F.reshape(Tensor(np.ones(6)), (4, 2))


def test_each_thread_has_its_own_tape():
    main_tape = current_tape()
    seen = []
    worker = threading.Thread(target=lambda: seen.append(current_tape()))
    worker.start()
    worker.join()
    assert seen[0] is not main_tape


def test_sgd_momentum_and_weight_decay():
    """Two steps of PyTorch-style SGD worked by hand."""
    w = parameter(np.array([1.0]))
    opt = SGD([("w", w)], lr=0.1, momentum=0.9, weight_decay=0.1)

    w.grad = np.array([0.5])
    opt.step()
    assert w.data[0] == pytest.approx(0.94)

    w.grad = np.array([0.5])
    opt.step()
    # Second step decays against the updated weight and reuses the buffer
    assert w.data[0] == pytest.approx(0.94 - 0.1 * (0.9 * 0.6 + 0.594))


def test_sgd_zero_learning_rate_is_a_no_op():
    w = parameter(np.array([1.0, -2.0]))
    opt = SGD([("w", w)], lr=0.0, momentum=0.9, weight_decay=5e-4)
    w.grad = np.array([3.0, 3.0])
    opt.step()
    np.testing.assert_array_equal(w.data, [1.0, -2.0])


def test_sgd_state_survives_rebind():
    w = parameter(np.array([1.0]))
    opt = SGD([("w", w)], lr=0.1, momentum=0.9)
    w.grad = np.array([1.0])
    opt.step()
    state = opt.state_dict()

    twin = parameter(np.array([1.0]))
    resumed = SGD([("w", twin)], lr=0.1, momentum=0.9)
    resumed.load_state_dict(state)
    opt.rebind([("w", twin)])
    assert resumed.state_dict()["w"][0] == pytest.approx(1.0)
    assert opt.params[0][1] is twin


def test_sgd_rejects_bad_hyperparameters():
    w = parameter(np.ones(1))
    with pytest.raises(ParameterError):
        SGD([("w", w)], lr=-0.1)
    with pytest.raises(ParameterError):
        SGD([("w", w)], lr=0.1, momentum=1.0)
