"""Reverse-mode automatic differentiation over numpy arrays.

A `Tensor` wraps an ndarray plus an optional gradient buffer. Every op
builds the result tensor and, when any input requires gradients, attaches
a closure that propagates upstream gradient to its parents. `backward()`
on a scalar loss walks the tape in reverse topological order.

Parameters and activations are float32 by default; nothing here forces a
dtype, so the same graph code runs in float64 for finite-difference
checks. Gradients accumulate (+=), which is what shared parameters such
as recurrent weights need.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .errors import ShapeError

_LOG_TINY = 1e-12  # floor inside log() so exact zeros do not produce inf


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents: tuple = ()
        self._backward = None

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        """Same values, cut off from the tape."""
        return Tensor(self.data, requires_grad=False)

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        if self.data.size != 1:
            raise ShapeError(f"backward() needs a scalar, got shape {self.shape}")
        if not self.requires_grad:
            raise RuntimeError("backward() on a tensor that does not require grad")

        # Iterative DFS: unrolled recurrent graphs get deep enough that
        # recursion would hit the interpreter limit.
        topo: list[Tensor] = []
        visited = {id(self)}
        stack: list[tuple[Tensor, Iterable[Tensor]]] = [(self, iter(self._parents))]
        while stack:
            node, parents = stack[-1]
            advanced = False
            for p in parents:
                if p.requires_grad and id(p) not in visited:
                    visited.add(id(p))
                    stack.append((p, iter(p._parents)))
                    advanced = True
                    break
            if not advanced:
                topo.append(node)
                stack.pop()

        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None:
                node._backward()

    def __repr__(self):
        return f"Tensor(shape={self.shape}, dtype={self.dtype}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, _wrap(other, self.dtype))

    def __radd__(self, other):
        return add(_wrap(other, self.dtype), self)

    def __mul__(self, other):
        return mul(self, _wrap(other, self.dtype))

    def __rmul__(self, other):
        return mul(_wrap(other, self.dtype), self)

    def __neg__(self):
        return neg(self)

    def __sub__(self, other):
        return add(self, neg(_wrap(other, self.dtype)))

    def __matmul__(self, other):
        return matmul(self, other)


def parameter(data) -> Tensor:
    """Trainable tensor (requires_grad=True)."""
    return Tensor(data, requires_grad=True)


def _wrap(value, dtype) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(np.asarray(value, dtype=dtype))


def _make(data: np.ndarray, parents: Sequence[Tensor]) -> Tensor:
    out = Tensor(data, requires_grad=any(p.requires_grad for p in parents))
    if out.requires_grad:
        out._parents = tuple(parents)
    return out


def _accum(t: Tensor, g: np.ndarray) -> None:
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum gradient over axes that numpy broadcasting expanded."""
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


# ---------------------------------------------------------------------------
# arithmetic


def add(a: Tensor, b: Tensor) -> Tensor:
    out = _make(a.data + b.data, (a, b))
    if out.requires_grad:
        def _backward():
            _accum(a, _unbroadcast(out.grad, a.shape))
            _accum(b, _unbroadcast(out.grad, b.shape))
        out._backward = _backward
    return out


def mul(a: Tensor, b: Tensor) -> Tensor:
    out = _make(a.data * b.data, (a, b))
    if out.requires_grad:
        def _backward():
            _accum(a, _unbroadcast(out.grad * b.data, a.shape))
            _accum(b, _unbroadcast(out.grad * a.data, b.shape))
        out._backward = _backward
    return out


def neg(a: Tensor) -> Tensor:
    out = _make(-a.data, (a,))
    if out.requires_grad:
        def _backward():
            _accum(a, -out.grad)
        out._backward = _backward
    return out


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """2-D matrix product. Higher-rank inputs must be reshaped first."""
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot matmul {a.shape} with {b.shape}")
    out = _make(a.data @ b.data, (a, b))
    if out.requires_grad:
        def _backward():
            _accum(a, out.grad @ b.data.T)
            _accum(b, a.data.T @ out.grad)
        out._backward = _backward
    return out


# ---------------------------------------------------------------------------
# activations


def tanh(a: Tensor) -> Tensor:
    y = np.tanh(a.data)
    out = _make(y, (a,))
    if out.requires_grad:
        def _backward():
            _accum(a, out.grad * (1.0 - y * y))
        out._backward = _backward
    return out


def sigmoid(a: Tensor) -> Tensor:
    # Split by sign so neither branch exponentiates a large positive value.
    x = a.data
    y = np.empty_like(x)
    pos = x >= 0
    y[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    y[~pos] = ex / (1.0 + ex)
    out = _make(y, (a,))
    if out.requires_grad:
        def _backward():
            _accum(a, out.grad * y * (1.0 - y))
        out._backward = _backward
    return out


def relu(a: Tensor) -> Tensor:
    y = np.maximum(a.data, 0)
    out = _make(y, (a,))
    if out.requires_grad:
        def _backward():
            _accum(a, out.grad * (a.data > 0))
        out._backward = _backward
    return out


def clamp(a: Tensor, lo: float, hi: float) -> Tensor:
    """Clip values to [lo, hi]; gradient is zero where clipping engaged."""
    y = np.clip(a.data, lo, hi)
    out = _make(y, (a,))
    if out.requires_grad:
        inside = (a.data > lo) & (a.data < hi)
        def _backward():
            _accum(a, out.grad * inside)
        out._backward = _backward
    return out


# ---------------------------------------------------------------------------
# structure


def reshape(a: Tensor, shape) -> Tensor:
    out = _make(a.data.reshape(shape), (a,))
    if out.requires_grad:
        def _backward():
            _accum(a, out.grad.reshape(a.shape))
        out._backward = _backward
    return out


def narrow(a: Tensor, axis: int, start: int, length: int) -> Tensor:
    """Contiguous slice [start, start+length) along one axis."""
    dim = a.shape[axis]
    if start < 0 or length < 0 or start + length > dim:
        raise ShapeError(f"narrow [{start}:{start + length}] out of range for axis {axis} of {a.shape}")
    index = [slice(None)] * a.data.ndim
    index[axis] = slice(start, start + length)
    index = tuple(index)
    out = _make(a.data[index], (a,))
    if out.requires_grad:
        def _backward():
            if a.grad is None:
                a.grad = np.zeros_like(a.data)
            a.grad[index] += out.grad
        out._backward = _backward
    return out


def concat(tensors: Sequence[Tensor], axis: int) -> Tensor:
    out = _make(np.concatenate([t.data for t in tensors], axis=axis), tensors)
    if out.requires_grad:
        sizes = [t.shape[axis] for t in tensors]
        offsets = np.cumsum([0] + sizes)
        def _backward():
            for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
                index = [slice(None)] * out.grad.ndim
                index[axis] = slice(lo, hi)
                _accum(t, out.grad[tuple(index)])
        out._backward = _backward
    return out


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    out = _make(np.stack([t.data for t in tensors], axis=axis), tensors)
    if out.requires_grad:
        def _backward():
            slabs = np.moveaxis(out.grad, axis, 0)
            for t, g in zip(tensors, slabs):
                _accum(t, g)
        out._backward = _backward
    return out


def repeat_vector(a: Tensor, count: int) -> Tensor:
    """Tile a (batch, dim) tensor into (batch, count, dim)."""
    if a.data.ndim != 2:
        raise ShapeError(f"repeat_vector expects a 2-D input, got {a.shape}")
    out = _make(np.repeat(a.data[:, None, :], count, axis=1), (a,))
    if out.requires_grad:
        def _backward():
            _accum(a, out.grad.sum(axis=1))
        out._backward = _backward
    return out


def embedding_lookup(table: Tensor, ids: np.ndarray) -> Tensor:
    """Gather rows of `table` by integer id; grad scatters back with +=."""
    ids = np.asarray(ids)
    if ids.min() < 0 or ids.max() >= table.shape[0]:
        raise IndexError(f"ids out of range [0, {table.shape[0]}) for embedding table")
    out = _make(table.data[ids], (table,))
    if out.requires_grad:
        def _backward():
            if table.grad is None:
                table.grad = np.zeros_like(table.data)
            np.add.at(table.grad, ids, out.grad)
        out._backward = _backward
    return out


# ---------------------------------------------------------------------------
# reductions and losses


def tensor_sum(a: Tensor) -> Tensor:
    out = _make(np.asarray(a.data.sum(), dtype=a.dtype), (a,))
    if out.requires_grad:
        def _backward():
            _accum(a, np.broadcast_to(out.grad, a.shape).copy())
        out._backward = _backward
    return out


def mean(a: Tensor) -> Tensor:
    n = a.data.size
    out = _make(np.asarray(a.data.mean(), dtype=a.dtype), (a,))
    if out.requires_grad:
        def _backward():
            _accum(a, np.broadcast_to(out.grad / n, a.shape).copy())
        out._backward = _backward
    return out


def softmax(a: Tensor) -> Tensor:
    """Softmax over the last axis, stabilised by max subtraction."""
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=-1, keepdims=True)
    out = _make(y, (a,))
    if out.requires_grad:
        def _backward():
            g = out.grad
            _accum(a, y * (g - (g * y).sum(axis=-1, keepdims=True)))
        out._backward = _backward
    return out


def categorical_cross_entropy(probs: Tensor, targets: np.ndarray) -> Tensor:
    """Mean -log p[target] over every position, padding included.

    `probs` holds probabilities (apply softmax first); `targets` is an
    integer array matching probs.shape[:-1].
    """
    targets = np.asarray(targets)
    if targets.shape != probs.shape[:-1]:
        raise ShapeError(f"targets {targets.shape} do not index probs {probs.shape}")
    if targets.min() < 0 or targets.max() >= probs.shape[-1]:
        raise IndexError(f"target ids out of range [0, {probs.shape[-1]})")
    flat_p = probs.data.reshape(-1, probs.shape[-1])
    rows = np.arange(flat_p.shape[0])
    cols = targets.reshape(-1)
    picked = np.maximum(flat_p[rows, cols], _LOG_TINY)
    value = -np.log(picked).mean()
    out = _make(np.asarray(value, dtype=probs.dtype), (probs,))
    if out.requires_grad:
        def _backward():
            grad = np.zeros_like(flat_p)
            grad[rows, cols] = -1.0 / (picked * flat_p.shape[0])
            _accum(probs, out.grad * grad.reshape(probs.shape))
        out._backward = _backward
    return out


def binary_cross_entropy(probs: Tensor, targets: np.ndarray) -> Tensor:
    """Mean BCE against hard 0/1 labels. Clamp probs to a safe range first."""
    t = np.asarray(targets, dtype=probs.dtype)
    if t.shape != probs.shape:
        raise ShapeError(f"targets {t.shape} do not match probs {probs.shape}")
    p = probs.data
    safe_p = np.maximum(p, _LOG_TINY)
    safe_q = np.maximum(1.0 - p, _LOG_TINY)
    value = -(t * np.log(safe_p) + (1.0 - t) * np.log(safe_q)).mean()
    out = _make(np.asarray(value, dtype=probs.dtype), (probs,))
    if out.requires_grad:
        def _backward():
            g = (-t / safe_p + (1.0 - t) / safe_q) / p.size
            _accum(probs, out.grad * g)
        out._backward = _backward
    return out


def l2_penalty(weights: Sequence[Tensor], strength: float) -> Tensor:
    """strength * sum of squared entries across the given tensors."""
    value = strength * float(sum((w.data.astype(np.float64) ** 2).sum() for w in weights))
    out = _make(np.asarray(value, dtype=weights[0].dtype), weights)
    if out.requires_grad:
        def _backward():
            for w in weights:
                _accum(w, out.grad * 2.0 * strength * w.data)
        out._backward = _backward
    return out


def dropout(a: Tensor, rate: float, rng, training: bool) -> Tensor:
    """Inverted dropout: zero a fraction `rate`, scale survivors by 1/(1-rate).

    Identity when not training or rate == 0. `rng` is consumed only when a
    mask is actually drawn, so inference does not advance random state.
    """
    if not 0.0 <= rate < 1.0:
        raise ShapeError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return a
    keep = (rng.random(a.shape) >= rate).astype(a.data.dtype)
    scaled = keep / np.asarray(1.0 - rate, dtype=a.data.dtype)
    out = _make(a.data * scaled, (a,))
    if out.requires_grad:
        def _backward():
            _accum(a, out.grad * scaled)
        out._backward = _backward
    return out
