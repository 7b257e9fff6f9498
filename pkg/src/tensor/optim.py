"""Stochastic gradient descent with momentum and weight decay."""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from src.exceptions import ParameterError
from src.tensor.tensor import Tensor


class SGD:
    """SGD over named parameters.

    The update is ``d = grad + weight_decay * w``, ``buf = momentum * buf + d``
    (``buf = d`` on the first step) and ``w -= lr * buf``. Momentum buffers are
    keyed by parameter name so they can be saved, copied and restored independently
    of the tensors they were built against.
    """

    def __init__(
        self,
        params: Sequence[tuple[str, Tensor]],
        *,
        lr: float,
        momentum: float = 0.0,
        weight_decay: float = 0.0,
    ) -> None:
        if lr < 0:
            msg = f"learning rate must be non-negative, got {lr}"
            raise ParameterError(msg)
        if not 0.0 <= momentum < 1.0:
            msg = f"momentum must be in [0, 1), got {momentum}"
            raise ParameterError(msg)
        self.params = list(params)
        self.lr = lr
        self.momentum = momentum
        self.weight_decay = weight_decay
        self.buffers: dict[str, np.ndarray] = {}

    def zero_grad(self) -> None:
        for _, param in self.params:
            param.zero_grad()

    def step(self) -> None:
        for name, param in self.params:
            if param.grad is None:
                continue
            d = param.grad
            if self.weight_decay:
                d = d + self.weight_decay * param.data
            if self.momentum:
                buf = self.buffers.get(name)
                buf = d.copy() if buf is None else self.momentum * buf + d
                self.buffers[name] = buf
                d = buf
            param.data -= self.lr * d

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: buf.copy() for name, buf in self.buffers.items()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        self.buffers = {name: buf.copy() for name, buf in state.items()}

    def rebind(self, params: Sequence[tuple[str, Tensor]]) -> None:
        """Point the optimizer at another model's parameters, keeping its buffers."""
        self.params = list(params)
