"""Optimizers over named parameter sets.

Parameters are trainable Tensors keyed by name. A missing gradient at
step() time means the parameter never appeared on the tape, which is how
accidental graph detachment gets caught.
"""

from __future__ import annotations

import numpy as np

from .errors import ContractError
from .tensor import Tensor


def zero_grad(params: dict[str, Tensor]) -> None:
    for p in params.values():
        p.grad = None


class Adam:
    """Adam with bias correction; the timestep advances once per step() call."""

    def __init__(self, params: dict[str, Tensor], lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = dict(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m = {k: np.zeros_like(p.data) for k, p in self.params.items()}
        self._v = {k: np.zeros_like(p.data) for k, p in self.params.items()}

    def step(self) -> None:
        self.t += 1
        for name, p in self.params.items():
            if p.grad is None:
                raise ContractError(
                    f"parameter {name!r} has no gradient; it is detached from the loss"
                )
            g = p.grad
            m = self._m[name]
            v = self._v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            m_hat = m / (1.0 - self.beta1 ** self.t)
            v_hat = v / (1.0 - self.beta2 ** self.t)
            p.data -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)

    def zero_grad(self) -> None:
        zero_grad(self.params)


class Sgd:
    """Plain gradient descent; kept behind a config switch for simple debugging."""

    def __init__(self, params: dict[str, Tensor], lr: float):
        self.params = dict(params)
        self.lr = lr

    def step(self) -> None:
        for name, p in self.params.items():
            if p.grad is None:
                raise ContractError(
                    f"parameter {name!r} has no gradient; it is detached from the loss"
                )
            p.data -= self.lr * p.grad

    def zero_grad(self) -> None:
        zero_grad(self.params)


def make_optimizer(kind: str, params: dict[str, Tensor], lr: float):
    if kind == "adam":
        return Adam(params, lr)
    if kind == "sgd":
        return Sgd(params, lr)
    raise ContractError(f"unknown optimizer {kind!r}")
