"""Seedable splitmix64 generator shared by every stochastic pipeline.

All randomness in the package flows through :class:`Rng` so that any run is
bit-reproducible from a single integer seed.  Child generators for modules,
trees, restarts, etc. are derived by stable hashing of (seed, tag), which
keeps streams independent of how much the parent has already drawn.
"""

from __future__ import annotations

import math

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_INV_2_53 = 2.0 ** -53


def _mix(z: int) -> int:
    """splitmix64 finalizer on a python int."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def _fnv1a(text: str) -> int:
    h = 0xCBF29CE484222325
    for b in text.encode("utf-8"):
        h = ((h ^ b) * 0x100000001B3) & _MASK64
    return h


class Rng:
    """Deterministic splitmix64 stream with block (vectorized) generation.

    The scalar and block paths produce identical streams: drawing n values
    one at a time equals one block of n.
    """

    def __init__(self, seed: int):
        self._seed = int(seed) & _MASK64
        self._state = self._seed

    @property
    def seed(self) -> int:
        return self._seed

    def derive(self, tag: str) -> "Rng":
        """Child generator keyed by (original seed, tag); parent state unaffected."""
        return Rng(_mix(self._seed ^ _fnv1a(tag)))

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK64
        return _mix(self._state)

    def u64_block(self, n: int) -> np.ndarray:
        if n <= 0:
            return np.empty(0, dtype=np.uint64)
        with np.errstate(over="ignore"):
            ks = np.uint64(self._state) + np.uint64(_GOLDEN) * np.arange(
                1, n + 1, dtype=np.uint64
            )
            self._state = int(ks[-1])
            z = (ks ^ (ks >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
            return z ^ (z >> np.uint64(31))

    def random(self, n: int | None = None):
        """Uniform float64 in [0, 1); scalar when n is None."""
        if n is None:
            return (self.next_u64() >> 11) * _INV_2_53
        return (self.u64_block(n) >> np.uint64(11)).astype(np.float64) * _INV_2_53

    def uniform(self, lo: float, hi: float, n: int | None = None):
        return lo + (hi - lo) * self.random(n)

    def integers(self, k: int, n: int | None = None):
        """Uniform ints in [0, k). Float scaling; bias is < 2^-40 for k < 2^13."""
        if k <= 0:
            raise ValueError("k must be positive")
        if n is None:
            return int(self.random() * k)
        return np.minimum((self.random(n) * k).astype(np.int64), k - 1)

    def normal(self, n: int | None = None):
        """Standard normals via Box-Muller."""
        if n is None:
            return float(self.normal(1)[0])
        pairs = (n + 1) // 2
        u1 = (self.u64_block(pairs) >> np.uint64(11)).astype(np.float64)
        u1 = (u1 + 1.0) * _INV_2_53  # (0, 1], keeps log finite
        u2 = self.random(pairs)
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * math.pi * u2
        out = np.concatenate([r * np.cos(theta), r * np.sin(theta)])
        return out[:n]

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates."""
        for i in range(len(items) - 1, 0, -1):
            j = int(self.random() * (i + 1))
            items[i], items[j] = items[j], items[i]

    def permutation(self, n: int) -> np.ndarray:
        idx = list(range(n))
        self.shuffle(idx)
        return np.asarray(idx, dtype=np.int64)

    def choice(self, n: int, size: int, replace: bool = True) -> np.ndarray:
        if replace:
            return self.integers(n, size)
        if size > n:
            raise ValueError("cannot draw more than n items without replacement")
        # partial Fisher-Yates: only the first `size` positions are settled
        items = list(range(n))
        for i in range(size):
            j = i + int(self.random() * (n - i))
            items[i], items[j] = items[j], items[i]
        return np.asarray(items[:size], dtype=np.int64)
