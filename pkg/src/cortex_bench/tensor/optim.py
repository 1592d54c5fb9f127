"""Stochastic gradient descent with momentum."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .core import Tensor


def sgd_step(params, grads, lr: float, momentum: float = 0.0, weight_decay: float = 0.0, velocities=None):
    """One momentum-SGD update on plain arrays.

    ``v <- momentum * v + grad + weight_decay * theta``;
    ``theta <- theta - lr * v``.  Returns ``(new_params, new_velocities)``.
    """
    if velocities is None:
        velocities = [np.zeros_like(np.asarray(p, dtype=float)) for p in params]
    new_params, new_vel = [], []
    for p, g, v in zip(params, grads, velocities):
        p = np.asarray(p)
        g = np.asarray(g)
        if p.shape != g.shape:
            raise ValueError(f"parameter shape {p.shape} does not match gradient shape {g.shape}")
        d = g + weight_decay * p if weight_decay else g
        v = momentum * v + d
        new_vel.append(v)
        new_params.append(p - lr * v)
    return new_params, new_vel


class SGD:
    """In-place momentum SGD over a list of parameter tensors."""

    def __init__(self, params: Sequence[Tensor], lr: float = 0.1, momentum: float = 0.9, weight_decay: float = 0.0):
        self.params = list(params)
        self.lr = lr
        self.momentum = momentum
        self.weight_decay = weight_decay
        self.velocities = [np.zeros_like(p.data) for p in self.params]

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None

    def step(self) -> None:
        for i, p in enumerate(self.params):
            if p.grad is None:
                continue
            g = p.grad
            if self.weight_decay:
                g = g + self.weight_decay * p.data
            v = self.velocities[i]
            v *= self.momentum
            v += g
            p.data -= (self.lr * v).astype(p.dtype, copy=False)
