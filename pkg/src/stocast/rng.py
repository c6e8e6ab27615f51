"""Deterministic pseudo-randomness for every pipeline stage.

All shuffles, placements, and noise draws in this package flow through
``SplitMix64`` so that partitions, parameters, and synthetic events are
reproducible bit-for-bit from a single integer seed, independent of any
library version.

Algorithm (splitmix64, version 1): the 64-bit state advances by the
constant 0x9E3779B97F4A7C15 per draw and the output is the finalized
mix of the new state,

    z  = state
    z ^= z >> 30; z *= 0xBF58476D1CE4E5B9
    z ^= z >> 27; z *= 0x94D049BB133111EB
    out = z ^ (z >> 31)

with all arithmetic modulo 2**64. Uniform doubles take the top 53 bits
of an output word. Shuffles are Fisher-Yates from the top index down
with j = floor(u * (i + 1)). Substreams hash the parent seed with a
sequence of integer keys, one splitmix step per key.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

RNG_ALGORITHM = "splitmix64/v1"


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def _key_to_u64(key) -> int:
    if isinstance(key, str):
        # FNV-1a over utf-8 bytes: stable across runs and platforms,
        # unlike the salted built-in hash.
        h = 0xCBF29CE484222325
        for b in key.encode("utf-8"):
            h = ((h ^ b) * 0x100000001B3) & _MASK
        return h
    return int(key) & _MASK


def derive_seed(seed: int, *keys) -> int:
    """Derive a child seed from ``seed`` and int or str keys.

    Each key folds into the state with one splitmix output step, so
    distinct key tuples yield statistically independent substreams.
    """
    s = seed & _MASK
    for k in keys:
        s = _mix((s + _GAMMA + _key_to_u64(k)) & _MASK)
    return s


class SplitMix64:
    """Counter-style 64-bit generator; see module docstring for the spec."""

    def __init__(self, seed: int):
        self._state = int(seed) & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK
        return _mix(self._state)

    def uniform(self) -> float:
        """One double in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * 2.0**-53

    def uniforms(self, n: int) -> np.ndarray:
        """Vectorized batch of ``n`` uniforms, identical to n calls of uniform()."""
        if n <= 0:
            return np.empty(0, dtype=np.float64)
        steps = np.arange(1, n + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = np.uint64(self._state) + steps * np.uint64(_GAMMA)
            z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
            z = z ^ (z >> np.uint64(31))
        self._state = (self._state + n * _GAMMA) & _MASK
        return (z >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def uniform_range(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.uniform()

    def randbelow(self, n: int) -> int:
        """Integer in [0, n) as floor(u * n); n must be positive."""
        if n <= 0:
            raise ValueError("randbelow requires n > 0")
        return min(int(self.uniform() * n), n - 1)

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        n = len(items)
        if n < 2:
            return
        u = self.uniforms(n - 1)
        for idx, i in enumerate(range(n - 1, 0, -1)):
            j = min(int(u[idx] * (i + 1)), i)
            items[i], items[j] = items[j], items[i]

    def permutation(self, n: int) -> np.ndarray:
        order = list(range(n))
        self.shuffle(order)
        return np.asarray(order, dtype=np.int64)

    def spawn(self, *keys) -> "SplitMix64":
        """Child generator keyed off the current state; does not advance it."""
        return SplitMix64(derive_seed(self._state, *keys))
