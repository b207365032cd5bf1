"""Finite-difference verification of every differentiable building block.

Each case builds a micro-sized float64 graph, runs backward once, then
sweeps every parameter coordinate with a central difference and compares.
Sizes are deliberately tiny so a full sweep stays fast enough to run over
many seeds.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import tensor as T
from .layers import DenseWeights, LstmWeights, dense, lstm_cell, lstm_sequence
from .rng import RngStream
from .tensor import Tensor

STEP = 1e-4
REL_FLOOR = 1e-6  # denominator floor so near-zero gradients do not blow up the ratio


@dataclass
class CaseResult:
    name: str
    max_rel_err: float
    worst_param: str
    passed: bool


def _param(rng: RngStream, shape, scale=0.4) -> Tensor:
    return T.parameter(rng.uniform(-scale, scale, shape, dtype=np.float64))


def _case_dense(rng):
    x = _param(rng, (3, 5))
    w = DenseWeights(w=_param(rng, (5, 4)), b=_param(rng, (4,)))
    def loss():
        return T.mean(T.tanh(dense(x, w)))
    return loss, {"x": x, "w": w.w, "b": w.b}


def _case_relu(rng):
    # keep entries away from the kink at zero, finite differences straddle it
    raw = rng.uniform(0.1, 0.8, (4, 6), dtype=np.float64)
    sign = np.where(rng.random((4, 6)) < 0.5, -1.0, 1.0)
    x = T.parameter(raw * sign)
    def loss():
        y = T.relu(x)
        return T.mean(T.mul(y, y))
    return loss, {"x": x}


def _case_embedding(rng):
    table = _param(rng, (6, 4))
    ids = np.array([[1, 2, 1], [0, 5, 2]])  # repeats exercise gradient accumulation
    def loss():
        e = T.embedding_lookup(table, ids)
        return T.mean(T.mul(e, e))
    return loss, {"table": table}


def _case_lstm_cell(rng):
    w = LstmWeights(w_x=_param(rng, (4, 12)), w_h=_param(rng, (3, 12)), b=_param(rng, (12,)))
    x = _param(rng, (2, 4))
    h0 = _param(rng, (2, 3))
    c0 = _param(rng, (2, 3))
    def loss():
        h, c = lstm_cell(x, h0, c0, w)
        return T.add(T.mean(T.mul(h, h)), T.mean(T.mul(c, c)))
    return loss, {"w_x": w.w_x, "w_h": w.w_h, "b": w.b, "x": x, "h0": h0, "c0": c0}


def _case_recurrent_scan(rng):
    w = LstmWeights(w_x=_param(rng, (3, 12)), w_h=_param(rng, (3, 12)), b=_param(rng, (12,)))
    x = _param(rng, (2, 4, 3))
    def loss():
        hs, hf, cf = lstm_sequence(w, x)
        seq = T.stack(hs, axis=1)
        return T.add(T.mean(T.mul(seq, seq)), T.mean(hf))
    return loss, {"w_x": w.w_x, "w_h": w.w_h, "b": w.b, "x": x}


def _case_bidirectional(rng):
    fwd = LstmWeights(w_x=_param(rng, (3, 12)), w_h=_param(rng, (3, 12)), b=_param(rng, (12,)))
    bwd = LstmWeights(w_x=_param(rng, (3, 12)), w_h=_param(rng, (3, 12)), b=_param(rng, (12,)))
    head = DenseWeights(w=_param(rng, (6, 2)), b=_param(rng, (2,)))
    x = _param(rng, (2, 3, 3))
    def loss():
        _, hf, _ = lstm_sequence(fwd, x)
        _, hb, _ = lstm_sequence(bwd, x, reverse=True)
        merged = T.concat([hf, hb], axis=1)
        return T.mean(T.tanh(dense(merged, head)))
    return loss, {"fwd.w_x": fwd.w_x, "fwd.w_h": fwd.w_h, "bwd.w_x": bwd.w_x,
                  "bwd.w_h": bwd.w_h, "head.w": head.w, "x": x}


def _case_softmax_ce(rng):
    logits = _param(rng, (3, 4, 5), scale=1.0)
    targets = np.array([[1, 4, 0, 0], [2, 3, 1, 0], [0, 2, 4, 3]])
    def loss():
        return T.categorical_cross_entropy(T.softmax(logits), targets)
    return loss, {"logits": logits}


def _case_sigmoid_bce(rng):
    x = _param(rng, (6, 3), scale=1.5)
    w = DenseWeights(w=_param(rng, (3, 1)), b=_param(rng, (1,)))
    labels = (rng.random((6, 1)) < 0.5).astype(np.float64)
    def loss():
        p = T.clamp(T.sigmoid(dense(x, w)), 1e-7, 1.0 - 1e-7)
        return T.binary_cross_entropy(p, labels)
    return loss, {"x": x, "w": w.w, "b": w.b}


def _case_dropout(rng):
    x = _param(rng, (4, 5))
    seed = int(rng.integers(0, 2**31, None))
    def loss():
        # fresh stream each call -> identical mask for every finite-difference eval
        d = T.dropout(x, 0.3, RngStream(seed).split("mask"), training=True)
        return T.mean(T.mul(d, d))
    return loss, {"x": x}


def _case_l2_penalty(rng):
    w1 = _param(rng, (4, 3))
    w2 = _param(rng, (3, 3))
    def loss():
        return T.l2_penalty([w1, w2], 0.05)
    return loss, {"w1": w1, "w2": w2}


def _case_seq2seq_micro(rng):
    vocab, emb_dim, units, steps, batch = 6, 4, 3, 3, 2
    table = _param(rng, (vocab, emb_dim))
    fwd = LstmWeights(w_x=_param(rng, (emb_dim, 12)), w_h=_param(rng, (units, 12)), b=_param(rng, (12,)))
    bwd = LstmWeights(w_x=_param(rng, (emb_dim, 12)), w_h=_param(rng, (units, 12)), b=_param(rng, (12,)))
    dec = LstmWeights(w_x=_param(rng, (2 * units, 12)), w_h=_param(rng, (units, 12)), b=_param(rng, (12,)))
    head = DenseWeights(w=_param(rng, (units, vocab)), b=_param(rng, (vocab,)))
    src = np.array([[1, 2, 0], [3, 4, 5]])
    tgt = np.array([[2, 3, 0], [4, 5, 1]])
    def loss():
        x = T.embedding_lookup(table, src)
        _, hf, _ = lstm_sequence(fwd, x)
        _, hb, _ = lstm_sequence(bwd, x, reverse=True)
        latent = T.concat([hf, hb], axis=1)
        hs, _, _ = lstm_sequence(dec, T.repeat_vector(latent, steps))
        flat = T.reshape(T.stack(hs, axis=1), (batch * steps, units))
        probs = T.softmax(T.reshape(dense(flat, head), (batch, steps, vocab)))
        return T.categorical_cross_entropy(probs, tgt)
    return loss, {"table": table, "fwd.w_x": fwd.w_x, "fwd.w_h": fwd.w_h,
                  "bwd.w_x": bwd.w_x, "bwd.w_h": bwd.w_h, "dec.w_x": dec.w_x,
                  "dec.w_h": dec.w_h, "head.w": head.w, "head.b": head.b}


CASES: dict[str, Callable] = {
    "dense": _case_dense,
    "relu": _case_relu,
    "embedding": _case_embedding,
    "lstm-cell": _case_lstm_cell,
    "recurrent-scan": _case_recurrent_scan,
    "bidirectional": _case_bidirectional,
    "softmax-ce": _case_softmax_ce,
    "sigmoid-bce": _case_sigmoid_bce,
    "dropout": _case_dropout,
    "l2-penalty": _case_l2_penalty,
    "seq2seq-micro": _case_seq2seq_micro,
}


def _numeric_grad(loss_fn: Callable[[], float], param: Tensor, step: float = STEP) -> np.ndarray:
    grad = np.zeros_like(param.data)
    flat = param.data.reshape(-1)
    out = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        up = loss_fn()
        flat[i] = orig - step
        down = loss_fn()
        flat[i] = orig
        out[i] = (up - down) / (2.0 * step)
    return grad


def check_gradients(
    seed: int,
    tolerance: float = 1e-3,
    cases: Sequence[str] | None = None,
    corrupt: str | None = None,
) -> list[CaseResult]:
    """Compare analytic and numeric gradients for each named case.

    `corrupt` deliberately perturbs one analytic gradient in the named case;
    it exists so callers can confirm the comparison actually has teeth.
    """
    names = list(cases) if cases else list(CASES)
    unknown = [n for n in names if n not in CASES]
    if unknown:
        raise KeyError(f"unknown gradient-check case(s): {unknown}")
    root = RngStream(seed)
    results = []
    for name in names:
        build = CASES[name]
        loss_tensor_fn, params = build(root.split(name))
        loss = loss_tensor_fn()
        loss.backward()
        analytic = {k: p.grad.copy() if p.grad is not None else np.zeros_like(p.data)
                    for k, p in params.items()}
        if corrupt == name:
            first = next(iter(analytic))
            analytic[first].reshape(-1)[0] += 1.0
        for p in params.values():
            p.grad = None

        def scalar_loss():
            return loss_tensor_fn().item()

        worst, worst_param = 0.0, ""
        for key, p in params.items():
            numeric = _numeric_grad(scalar_loss, p)
            denom = np.maximum(np.maximum(np.abs(analytic[key]), np.abs(numeric)), REL_FLOOR)
            err = float((np.abs(analytic[key] - numeric) / denom).max())
            if err > worst:
                worst, worst_param = err, key
        results.append(CaseResult(name=name, max_rel_err=worst,
                                  worst_param=worst_param, passed=worst <= tolerance))
    return results
