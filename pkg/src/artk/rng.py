"""Seeded, bit-reproducible random streams.

The generator is SplitMix64 used directly as a counter-based stream, which
makes it trivially vectorizable with numpy uint64 arithmetic. Normal variates
come from the Box-Muller transform over pairs of uniforms.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def splitmix64(x: int) -> int:
    """One SplitMix64 step from state ``x``; handy for deriving sub-seeds."""
    z = np.array([(x + 0x9E3779B97F4A7C15) & MASK64], dtype=np.uint64)
    return int(_mix(z)[0])


def derive_seed(seed: int, *tags: int) -> int:
    """Deterministically fold integer tags into a seed."""
    s = seed & MASK64
    for t in tags:
        s = splitmix64((s ^ (t & MASK64)) & MASK64)
    return s


class SplitMix64:
    """SplitMix64 stream with uniform, normal and integer helpers."""

    def __init__(self, seed: int):
        self.state = int(seed) & MASK64

    def next_u64(self, n: int) -> np.ndarray:
        idx = np.arange(1, n + 1, dtype=np.uint64)
        z = np.uint64(self.state) + idx * _GOLDEN
        self.state = (self.state + n * 0x9E3779B97F4A7C15) & MASK64
        return _mix(z)

    def uniform(self, shape=()) -> np.ndarray:
        """Uniform floats in [0, 1) with 53 random bits."""
        n = int(np.prod(shape, dtype=np.int64))
        u = (self.next_u64(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53
        return u.reshape(shape)

    def normal(self, shape=()) -> np.ndarray:
        n = int(np.prod(shape, dtype=np.int64))
        pairs = (n + 1) // 2
        u = self.uniform((pairs, 2))
        radius = np.sqrt(-2.0 * np.log1p(-u[:, 0]))
        theta = 2.0 * np.pi * u[:, 1]
        z = np.empty((pairs, 2))
        z[:, 0] = radius * np.cos(theta)
        z[:, 1] = radius * np.sin(theta)
        return z.reshape(-1)[:n].reshape(shape)

    def integers(self, low: int, high: int, shape=()) -> np.ndarray | int:
        """Integers in ``[low, high)``."""
        if high <= low:
            raise ValueError("empty integer range")
        u = self.uniform(shape)
        out = low + np.floor(u * (high - low)).astype(np.int64)
        return int(out) if np.ndim(out) == 0 else out
