"""Dense tensors with reverse-mode automatic differentiation."""

from .optim import SGD
from .tensor import Function, Tape, Tensor, current_tape, no_grad, parameter

__all__ = ["SGD", "Function", "Tape", "Tensor", "current_tape", "no_grad", "parameter"]
