"""Weight containers and forward rules for dense and LSTM layers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .errors import ShapeError
from .tensor import Tensor


def glorot_init(shape: tuple, rng, dtype=np.float32) -> np.ndarray:
    """Glorot/Xavier uniform for matrices, zeros for bias vectors.

    The bound is sqrt(6 / (fan_in + fan_out)) with fans taken from the
    first two axes.
    """
    if len(shape) == 1:
        return np.zeros(shape, dtype=dtype)
    fan_in, fan_out = shape[0], shape[1]
    bound = float(np.sqrt(6.0 / (fan_in + fan_out)))
    return rng.uniform(-bound, bound, shape, dtype=dtype)


@dataclass
class DenseWeights:
    w: Tensor
    b: Tensor

    @classmethod
    def create(cls, in_dim: int, units: int, rng, dtype=np.float32) -> "DenseWeights":
        return cls(
            w=T.parameter(glorot_init((in_dim, units), rng, dtype)),
            b=T.parameter(glorot_init((units,), rng, dtype)),
        )

    def params(self) -> list[Tensor]:
        return [self.w, self.b]


def dense(x: Tensor, weights: DenseWeights) -> Tensor:
    return T.add(T.matmul(x, weights.w), weights.b)


@dataclass
class LstmWeights:
    """Fused gate weights; the 4H axis is ordered input, forget, candidate, output."""

    w_x: Tensor  # (in_dim, 4 * units)
    w_h: Tensor  # (units, 4 * units)
    b: Tensor    # (4 * units,)

    @classmethod
    def create(cls, in_dim: int, units: int, rng, dtype=np.float32) -> "LstmWeights":
        return cls(
            w_x=T.parameter(glorot_init((in_dim, 4 * units), rng, dtype)),
            w_h=T.parameter(glorot_init((units, 4 * units), rng, dtype)),
            b=T.parameter(glorot_init((4 * units,), rng, dtype)),
        )

    @property
    def units(self) -> int:
        return self.w_h.shape[0]

    def params(self) -> list[Tensor]:
        return [self.w_x, self.w_h, self.b]

    def kernels(self) -> list[Tensor]:
        """The two matrices, the ones an L2 penalty applies to (bias excluded)."""
        return [self.w_x, self.w_h]


def lstm_cell(x_t: Tensor, h_prev: Tensor, c_prev: Tensor, weights: LstmWeights) -> tuple[Tensor, Tensor]:
    """Single step. One fused GEMM computes all four gate pre-activations."""
    units = weights.units
    z = T.add(T.add(T.matmul(x_t, weights.w_x), T.matmul(h_prev, weights.w_h)), weights.b)
    gate_i = T.sigmoid(T.narrow(z, 1, 0, units))
    gate_f = T.sigmoid(T.narrow(z, 1, units, units))
    gate_g = T.tanh(T.narrow(z, 1, 2 * units, units))
    gate_o = T.sigmoid(T.narrow(z, 1, 3 * units, units))
    c = T.add(T.mul(gate_f, c_prev), T.mul(gate_i, gate_g))
    h = T.mul(gate_o, T.tanh(c))
    return h, c


def lstm_sequence(
    weights: LstmWeights, inputs: Tensor, reverse: bool = False
) -> tuple[list[Tensor], Tensor, Tensor]:
    """Run the cell over a (batch, time, dim) tensor from zero initial state.

    Returns per-timestep hidden states indexed by original position plus the
    final (h, c) after the last processed step; with reverse=True the scan
    runs right to left, so the final state corresponds to position 0.
    """
    if inputs.data.ndim != 3:
        raise ShapeError(f"lstm_sequence expects (batch, time, dim), got {inputs.shape}")
    batch, steps, dim = inputs.shape
    units = weights.units
    h = Tensor(np.zeros((batch, units), dtype=inputs.dtype))
    c = Tensor(np.zeros((batch, units), dtype=inputs.dtype))
    order = range(steps - 1, -1, -1) if reverse else range(steps)
    hidden: list = [None] * steps
    for t in order:
        x_t = T.reshape(T.narrow(inputs, 1, t, 1), (batch, dim))
        h, c = lstm_cell(x_t, h, c, weights)
        hidden[t] = h
    return hidden, h, c
