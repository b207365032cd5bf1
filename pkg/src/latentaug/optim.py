"""Adam with bias correction.

The update follows the Keras convention: epsilon is added outside the
square root, `p -= lr * m_hat / (sqrt(v_hat) + eps)`. With zeroed moment
buffers the first step therefore moves each entry by almost exactly lr in
the direction opposing its gradient.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor import Tensor

EPSILON = 1e-7


@dataclass
class AdamState:
    lr: float
    beta1: float
    beta2: float
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    epsilon: float = EPSILON

    @classmethod
    def for_param(cls, param: Tensor, lr: float, beta1: float, beta2: float) -> "AdamState":
        zeros = np.zeros_like(param.data)
        return cls(lr=lr, beta1=beta1, beta2=beta2, m=zeros.copy(), v=zeros)


def adam_update(param: Tensor, state: AdamState) -> None:
    """One in-place Adam step; consumes and clears param.grad."""
    if param.grad is None:
        raise ValueError("adam_update called on a parameter with no gradient")
    g = param.grad
    state.t += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * g
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * (g * g)
    m_hat = state.m / (1.0 - state.beta1 ** state.t)
    v_hat = state.v / (1.0 - state.beta2 ** state.t)
    param.data -= (state.lr * m_hat / (np.sqrt(v_hat) + state.epsilon)).astype(param.data.dtype)
    param.grad = None


class Adam:
    """Bundles per-parameter state for a list of trainable tensors."""

    def __init__(self, params: list[Tensor], lr: float, beta1: float, beta2: float):
        self.params = list(params)
        self.states = [AdamState.for_param(p, lr, beta1, beta2) for p in self.params]

    def step(self) -> None:
        for p, s in zip(self.params, self.states):
            adam_update(p, s)

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None
