"""Seeded random streams with named, splittable sub-streams.

Every source of randomness in a run derives from one top-level seed via
`RngStream.split(name)`, so each stage (data shuffle, per-model init,
dropout, noise) is independently reproducible. Streams are backed by
numpy's PCG64, keyed through SeedSequence, which is stable across
platforms and numpy releases.
"""

from __future__ import annotations

import hashlib

import numpy as np

ALGORITHM = "pcg64"


def _name_key(name: str) -> int:
    # uint32 spawn-key element derived from the stream name
    return int.from_bytes(hashlib.sha256(name.encode("utf-8")).digest()[:4], "big")


class RngStream:
    """Deterministic random stream; identical seed gives identical draws."""

    algorithm = ALGORITHM

    def __init__(self, seed: int, _spawn_key: tuple[int, ...] = ()):
        self.seed = int(seed)
        self._spawn_key = tuple(_spawn_key)
        seq = np.random.SeedSequence(self.seed, spawn_key=self._spawn_key)
        self._gen = np.random.Generator(np.random.PCG64(seq))

    def split(self, name: str) -> "RngStream":
        """Derive an independent child stream identified by `name`."""
        return RngStream(self.seed, self._spawn_key + (_name_key(name),))

    def uniform(self, low, high, shape, dtype=np.float32) -> np.ndarray:
        return self._gen.uniform(low, high, size=shape).astype(dtype)

    def random(self, shape) -> np.ndarray:
        return self._gen.random(size=shape)

    def integers(self, low, high, shape=None) -> np.ndarray:
        return self._gen.integers(low, high, size=shape)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, spawn_key={self._spawn_key})"
