"""Tensor, differentiable functions and the gradient tape."""

from __future__ import annotations

import logging
import threading
from collections.abc import Iterator, Sequence
from contextlib import contextmanager
from typing import Any

import numpy as np

from src.config import settings
from src.exceptions import NumericalError, UsageError

logger = logging.getLogger(__name__)

_local = threading.local()


class Function:
    """Base class of differentiable operations.

    Subclasses implement ``forward`` on raw arrays and ``backward``, which maps the
    gradient of the output to one gradient per input (``None`` when an input does
    not receive one).
    """

    def __init__(self, *inputs: Tensor) -> None:
        self.inputs = inputs

    def forward(self, *arrays: np.ndarray, **kwargs: Any) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        raise NotImplementedError

    @classmethod
    def apply(cls, *inputs: Tensor, **kwargs: Any) -> Tensor:
        """Run the forward pass and record the result on the current tape."""
        fn = cls(*inputs)
        out_data = fn.forward(*(t.data for t in inputs), **kwargs)
        if settings.check_finite and not np.isfinite(out_data).all():
            msg = f"{cls.__name__} produced non-finite values"
            raise NumericalError(msg)

        tape = current_tape()
        requires_grad = tape.enabled and any(t.requires_grad for t in inputs)
        out = Tensor(out_data, requires_grad=requires_grad, creator=fn if requires_grad else None)
        if requires_grad:
            tape.record(out)
        return out


class Tensor:
    """Dense n-dimensional array with optional gradient tracking."""

    def __init__(
        self,
        data: np.ndarray | float | Sequence[Any],
        *,
        requires_grad: bool = False,
        creator: Function | None = None,
        dtype: np.dtype[Any] | type | None = None,
    ) -> None:
        array = np.asarray(data, dtype=dtype)
        if not np.issubdtype(array.dtype, np.floating):
            array = array.astype(np.float64)
        self.data: np.ndarray = array
        self.requires_grad = requires_grad
        self.creator = creator
        self.grad: np.ndarray | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def dtype(self) -> np.dtype[Any]:
        return self.data.dtype

    def item(self) -> float:
        if self.size != 1:
            msg = f"item() needs a single element, got shape {self.shape}"
            raise UsageError(msg)
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> Tensor:
        """Return a constant view of this tensor; no gradient flows through it."""
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        """Populate ``grad`` on every tracked ancestor of this scalar."""
        current_tape().backward(self)

    # Operator sugar, resolved lazily to avoid an import cycle
    def __add__(self, other: Tensor) -> Tensor:
        from src.tensor import functional as F

        return F.add(self, other)

    def __sub__(self, other: Tensor) -> Tensor:
        from src.tensor import functional as F

        return F.sub(self, other)

    def __mul__(self, other: Tensor | float) -> Tensor:
        from src.tensor import functional as F

        if isinstance(other, Tensor):
            return F.mul(self, other)
        return F.scale(self, float(other))

    __rmul__ = __mul__

    def __neg__(self) -> Tensor:
        from src.tensor import functional as F

        return F.scale(self, -1.0)

    def __matmul__(self, other: Tensor) -> Tensor:
        from src.tensor import functional as F

        return F.matmul(self, other)

    def sum(self) -> Tensor:
        from src.tensor import functional as F

        return F.sum(self)

    def mean(self) -> Tensor:
        from src.tensor import functional as F

        return F.mean(self)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, dtype={self.dtype}, requires_grad={self.requires_grad})"


class Tape:
    """Ordered record of the differentiable operations executed by one worker.

    Operations are appended as they run, so the record is already in topological
    order; ``backward`` walks it once in reverse and then clears it.
    """

    def __init__(self) -> None:
        self._nodes: list[Tensor] = []
        self.enabled = True

    def __len__(self) -> int:
        return len(self._nodes)

    def record(self, node: Tensor) -> None:
        self._nodes.append(node)

    def clear(self) -> None:
        self._nodes.clear()

    def backward(self, loss: Tensor) -> None:
        if loss.size != 1:
            msg = f"backward needs a scalar loss, got shape {loss.shape}"
            raise UsageError(msg)
        if loss.creator is None:
            msg = "loss was not produced on the tape"
            raise UsageError(msg)

        pending: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
        try:
            for node in reversed(self._nodes):
                grad = pending.pop(id(node), None)
                if grad is None:
                    continue
                node.grad = grad
                assert node.creator is not None
                input_grads = node.creator.backward(grad)
                for inp, inp_grad in zip(node.creator.inputs, input_grads, strict=True):
                    if inp_grad is None or not inp.requires_grad:
                        continue
                    inp_grad = inp_grad.astype(inp.data.dtype, copy=False)
                    if inp.creator is None:
                        inp.grad = inp_grad.copy() if inp.grad is None else inp.grad + inp_grad
                    else:
                        key = id(inp)
                        pending[key] = inp_grad if key not in pending else pending[key] + inp_grad
        finally:
            self.clear()


def current_tape() -> Tape:
    """Return the tape of the calling thread, creating it on first use."""
    tape = getattr(_local, "tape", None)
    if tape is None:
        tape = Tape()
        _local.tape = tape
    return tape


@contextmanager
def no_grad() -> Iterator[None]:
    """Disable recording on the current thread's tape."""
    tape = current_tape()
    previous = tape.enabled
    tape.enabled = False
    try:
        yield
    finally:
        tape.enabled = previous


def parameter(data: np.ndarray) -> Tensor:
    """Wrap an array as a trainable leaf tensor."""
    return Tensor(data, requires_grad=True)
