"""Differentiable operations on :class:`~src.tensor.tensor.Tensor`.

Every public function validates its arguments, then dispatches to a
:class:`Function` subclass that records itself on the current tape.
"""

from __future__ import annotations

from collections.abc import Iterator
from typing import Any

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from src.exceptions import DimensionError, ParameterError
from src.tensor.tensor import Function, Tensor

# Upper bound on im2col elements materialized at once; the batch is chunked to fit.
_IM2COL_BUDGET = 1 << 24


class Add(Function):
    def forward(self, a: np.ndarray, b: np.ndarray, **kwargs: Any) -> np.ndarray:
        self.bias = a.shape != b.shape
        return a + b

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        return grad, grad.sum(axis=0) if self.bias else grad


class Sub(Function):
    def forward(self, a: np.ndarray, b: np.ndarray, **kwargs: Any) -> np.ndarray:
        return a - b

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        return grad, -grad


class Mul(Function):
    def forward(self, a: np.ndarray, b: np.ndarray, **kwargs: Any) -> np.ndarray:
        return a * b

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        a, b = (t.data for t in self.inputs)
        return grad * b, grad * a


class Scale(Function):
    def forward(self, a: np.ndarray, *, factor: float = 1.0, **kwargs: Any) -> np.ndarray:
        self.factor = factor
        return a * factor

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        return (grad * self.factor,)


class MatMul(Function):
    def forward(self, a: np.ndarray, b: np.ndarray, **kwargs: Any) -> np.ndarray:
        return a @ b

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        a, b = (t.data for t in self.inputs)
        return grad @ b.T, a.T @ grad


class Sum(Function):
    def forward(self, a: np.ndarray, **kwargs: Any) -> np.ndarray:
        return np.asarray(a.sum(), dtype=a.dtype)

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        (a,) = self.inputs
        return (np.full(a.shape, grad, dtype=a.dtype),)


class Mean(Function):
    def forward(self, a: np.ndarray, **kwargs: Any) -> np.ndarray:
        return np.asarray(a.mean(), dtype=a.dtype)

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        (a,) = self.inputs
        return (np.full(a.shape, grad / a.size, dtype=a.dtype),)


class Reshape(Function):
    def forward(self, a: np.ndarray, *, shape: tuple[int, ...] = (), **kwargs: Any) -> np.ndarray:
        return a.reshape(shape)

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        return (grad.reshape(self.inputs[0].shape),)


class ReLU(Function):
    def forward(self, a: np.ndarray, **kwargs: Any) -> np.ndarray:
        self.mask = a > 0
        return np.where(self.mask, a, np.zeros((), dtype=a.dtype))

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        return (grad * self.mask,)


def _im2col(xp: np.ndarray, stride: int, out_h: int, out_w: int) -> np.ndarray:
    """Unfold 3x3 patches of a padded batch into rows of a matrix."""
    n, c = xp.shape[:2]
    windows = sliding_window_view(xp, (3, 3), axis=(2, 3))[:, :, ::stride, ::stride]
    windows = windows[:, :, :out_h, :out_w]
    return windows.transpose(0, 2, 3, 1, 4, 5).reshape(n * out_h * out_w, c * 9)


def _batch_chunks(n: int, row_elements: int) -> Iterator[tuple[int, int]]:
    step = max(1, _IM2COL_BUDGET // max(row_elements, 1))
    for start in range(0, n, step):
        yield start, min(n, start + step)


class Conv2d(Function):
    def forward(
        self,
        x: np.ndarray,
        w: np.ndarray,
        *bias: np.ndarray,
        stride: int = 1,
        padding: int = 0,
        **kwargs: Any,
    ) -> np.ndarray:
        n, c, h, width = x.shape
        f = w.shape[0]
        self.stride = stride
        self.padding = padding
        self.out_h = (h + 2 * padding - 3) // stride + 1
        self.out_w = (width + 2 * padding - 3) // stride + 1
        pad = ((0, 0), (0, 0), (padding, padding), (padding, padding))
        self.xp = np.pad(x, pad) if padding else x

        wmat = w.reshape(f, c * 9)
        out = np.empty((n, f, self.out_h, self.out_w), dtype=np.result_type(x, w))
        for start, stop in _batch_chunks(n, self.out_h * self.out_w * c * 9):
            cols = _im2col(self.xp[start:stop], stride, self.out_h, self.out_w)
            block = (cols @ wmat.T).reshape(stop - start, self.out_h, self.out_w, f)
            out[start:stop] = block.transpose(0, 3, 1, 2)
        if bias:
            out += bias[0].reshape(1, f, 1, 1)
        return out

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        x_t, w_t = self.inputs[0], self.inputs[1]
        n, c, h, width = x_t.shape
        f = w_t.shape[0]
        s, oh, ow = self.stride, self.out_h, self.out_w
        wmat = w_t.data.reshape(f, c * 9)

        dw = np.zeros_like(wmat)
        dxp = np.zeros_like(self.xp) if x_t.requires_grad else None
        for start, stop in _batch_chunks(n, oh * ow * c * 9):
            cols = _im2col(self.xp[start:stop], s, oh, ow)
            g2 = grad[start:stop].transpose(0, 2, 3, 1).reshape(-1, f)
            dw += g2.T @ cols
            if dxp is not None:
                dcols = (g2 @ wmat).reshape(stop - start, oh, ow, c, 3, 3)
                for i in range(3):
                    rows = slice(i, i + s * (oh - 1) + 1, s)
                    for j in range(3):
                        cols_ij = slice(j, j + s * (ow - 1) + 1, s)
                        dxp[start:stop, :, rows, cols_ij] += dcols[..., i, j].transpose(0, 3, 1, 2)

        dx = None
        if dxp is not None:
            p = self.padding
            dx = dxp[:, :, p : p + h, p : p + width] if p else dxp
        grads: tuple[np.ndarray | None, ...] = (dx, dw.reshape(w_t.shape))
        if len(self.inputs) == 3:
            grads += (grad.sum(axis=(0, 2, 3)),)
        return grads


class MaxPool2x2(Function):
    def forward(self, x: np.ndarray, **kwargs: Any) -> np.ndarray:
        n, c, h, w = x.shape
        oh, ow = h // 2, w // 2
        windows = (
            x[:, :, : 2 * oh, : 2 * ow]
            .reshape(n, c, oh, 2, ow, 2)
            .transpose(0, 1, 2, 4, 3, 5)
            .reshape(n, c, oh, ow, 4)
        )
        # argmax returns the first maximum, i.e. row-major order within the window
        self.argmax = windows.argmax(axis=-1)
        return np.take_along_axis(windows, self.argmax[..., None], axis=-1)[..., 0]

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        n, c, h, w = self.inputs[0].shape
        oh, ow = h // 2, w // 2
        slots = np.zeros((n, c, oh, ow, 4), dtype=grad.dtype)
        np.put_along_axis(slots, self.argmax[..., None], grad[..., None], axis=-1)
        dx = np.zeros((n, c, h, w), dtype=grad.dtype)
        windows = slots.reshape(n, c, oh, ow, 2, 2).transpose(0, 1, 2, 4, 3, 5)
        dx[:, :, : 2 * oh, : 2 * ow] = windows.reshape(n, c, 2 * oh, 2 * ow)
        return (dx,)


class LogSoftmax(Function):
    def forward(self, z: np.ndarray, *, temperature: float = 1.0, **kwargs: Any) -> np.ndarray:
        self.temperature = temperature
        s = z / temperature
        shifted = s - s.max(axis=-1, keepdims=True)
        out = shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
        self.probs = np.exp(out)
        return out

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        dz = grad - self.probs * grad.sum(axis=-1, keepdims=True)
        return (dz / self.temperature,)


class Softmax(Function):
    def forward(self, z: np.ndarray, *, temperature: float = 1.0, **kwargs: Any) -> np.ndarray:
        self.temperature = temperature
        s = z / temperature
        e = np.exp(s - s.max(axis=-1, keepdims=True))
        self.probs = e / e.sum(axis=-1, keepdims=True)
        return self.probs

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        p = self.probs
        return (p * (grad - (grad * p).sum(axis=-1, keepdims=True)) / self.temperature,)


class Gather(Function):
    def forward(
        self, a: np.ndarray, *, indices: np.ndarray | None = None, **kwargs: Any
    ) -> np.ndarray:
        assert indices is not None
        self.indices = indices
        return a[np.arange(a.shape[0]), indices]

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        a = self.inputs[0]
        da = np.zeros(a.shape, dtype=grad.dtype)
        da[np.arange(a.shape[0]), self.indices] = grad
        return (da,)


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum; ``b`` may also be a bias broadcast over the batch dimension."""
    if a.shape != b.shape and b.shape != a.shape[1:]:
        msg = f"cannot add shapes {a.shape} and {b.shape}"
        raise DimensionError(msg)
    return Add.apply(a, b)


def sub(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        msg = f"cannot subtract shapes {a.shape} and {b.shape}"
        raise DimensionError(msg)
    return Sub.apply(a, b)


def mul(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        msg = f"cannot multiply shapes {a.shape} and {b.shape}"
        raise DimensionError(msg)
    return Mul.apply(a, b)


def scale(a: Tensor, factor: float) -> Tensor:
    return Scale.apply(a, factor=factor)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product of an ``m×k`` and a ``k×n`` tensor."""
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        msg = f"matmul shape mismatch: {a.shape} @ {b.shape}"
        raise DimensionError(msg)
    return MatMul.apply(a, b)


def sum(a: Tensor) -> Tensor:
    return Sum.apply(a)


def mean(a: Tensor) -> Tensor:
    return Mean.apply(a)


def reshape(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    if int(np.prod(shape)) != a.size:
        msg = f"cannot reshape {a.shape} into {shape}"
        raise DimensionError(msg)
    return Reshape.apply(a, shape=tuple(shape))


def flatten(a: Tensor) -> Tensor:
    """Collapse all but the batch dimension."""
    return reshape(a, (a.shape[0], int(np.prod(a.shape[1:]))))


def relu(a: Tensor) -> Tensor:
    return ReLU.apply(a)


def conv2d(
    x: Tensor,
    kernel: Tensor,
    bias: Tensor | None = None,
    *,
    stride: int = 1,
    padding: int = 0,
) -> Tensor:
    """3x3 cross-correlation of an ``N×C×H×W`` batch with ``F×C×3×3`` filters."""
    if x.ndim != 4 or kernel.ndim != 4:
        msg = f"conv2d expects 4-d input and kernel, got {x.shape} and {kernel.shape}"
        raise DimensionError(msg)
    if kernel.shape[2:] != (3, 3):
        msg = f"only 3x3 kernels are supported, got {kernel.shape[2:]}"
        raise DimensionError(msg)
    if x.shape[1] != kernel.shape[1]:
        msg = f"channel mismatch: input has {x.shape[1]}, kernel expects {kernel.shape[1]}"
        raise DimensionError(msg)
    if padding not in (0, 1):
        msg = f"padding must be 0 or 1, got {padding}"
        raise ParameterError(msg)
    if stride < 1:
        msg = f"stride must be positive, got {stride}"
        raise ParameterError(msg)
    if min(x.shape[2:]) + 2 * padding < 3:
        msg = f"input {x.shape[2:]} is smaller than the 3x3 kernel"
        raise DimensionError(msg)
    if bias is not None and bias.shape != (kernel.shape[0],):
        msg = f"bias shape {bias.shape} does not match {kernel.shape[0]} filters"
        raise DimensionError(msg)
    inputs = (x, kernel) if bias is None else (x, kernel, bias)
    return Conv2d.apply(*inputs, stride=stride, padding=padding)


def maxpool2x2(x: Tensor) -> Tensor:
    """2x2 max pooling with stride 2; an odd trailing row/column is dropped."""
    if x.ndim != 4 or min(x.shape[2:]) < 2:
        msg = f"maxpool2x2 expects N×C×H×W with H, W >= 2, got {x.shape}"
        raise DimensionError(msg)
    return MaxPool2x2.apply(x)


def _check_temperature(temperature: float) -> None:
    if not temperature > 0:
        msg = f"temperature must be positive, got {temperature}"
        raise ParameterError(msg)


def log_softmax(z: Tensor, temperature: float = 1.0) -> Tensor:
    """Log of the temperature softmax over the last axis (log-sum-exp form)."""
    _check_temperature(temperature)
    return LogSoftmax.apply(z, temperature=temperature)


def softmax_temp(z: Tensor, temperature: float = 1.0) -> Tensor:
    """Temperature softmax ``exp(z/τ) / Σ exp(z_i/τ)`` over the last axis."""
    _check_temperature(temperature)
    return Softmax.apply(z, temperature=temperature)


def gather(a: Tensor, indices: np.ndarray) -> Tensor:
    """Pick ``a[b, indices[b]]`` for every row ``b``."""
    if a.ndim != 2 or indices.shape != (a.shape[0],):
        msg = f"gather expects B×C values and B indices, got {a.shape} and {indices.shape}"
        raise DimensionError(msg)
    return Gather.apply(a, indices=indices)


def conv2d_reference(
    x: np.ndarray,
    kernel: np.ndarray,
    bias: np.ndarray | None = None,
    *,
    stride: int = 1,
    padding: int = 0,
) -> np.ndarray:
    """Direct-loop 3x3 cross-correlation, kept as a slow oracle for the im2col path."""
    n, c, h, w = x.shape
    f = kernel.shape[0]
    xp = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    oh = (h + 2 * padding - 3) // stride + 1
    ow = (w + 2 * padding - 3) // stride + 1
    out = np.zeros((n, f, oh, ow), dtype=np.result_type(x, kernel))
    for b in range(n):
        for k in range(f):
            for i in range(oh):
                for j in range(ow):
                    acc = 0.0 if bias is None else float(bias[k])
                    for ch in range(c):
                        for di in range(3):
                            for dj in range(3):
                                pixel = xp[b, ch, i * stride + di, j * stride + dj]
                                acc += pixel * kernel[k, ch, di, dj]
                    out[b, k, i, j] = acc
    return out
