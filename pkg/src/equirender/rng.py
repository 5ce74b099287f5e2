"""SplitMix64: a tiny, fixed, portable random stream.

Output ``i`` (1-based) of a stream seeded with ``s`` is ``mix(s + i * GAMMA)``
modulo 2**64, so blocks of draws vectorize. Doubles take the top 53 bits.
"""

from __future__ import annotations

import numpy as np

GAMMA = 0x9E3779B97F4A7C15
MASK64 = (1 << 64) - 1


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


class SplitMix64:
    def __init__(self, seed: int):
        self.state = int(seed) & MASK64

    def next_u64(self, count: int | None = None):
        k = 1 if count is None else int(count)
        steps = np.arange(1, k + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = np.uint64(self.state) + steps * np.uint64(GAMMA)
            out = _mix(z)
        self.state = (self.state + k * GAMMA) & MASK64
        return int(out[0]) if count is None else out

    def uniform(self, low: float = 0.0, high: float = 1.0, size=None):
        """Uniform doubles in [low, high)."""
        if size is None:
            u = (self.next_u64() >> 11) * 2.0 ** -53
            return low + (high - low) * u
        shape = (size,) if np.isscalar(size) else tuple(size)
        n = int(np.prod(shape))
        u = (self.next_u64(n) >> np.uint64(11)).astype(np.float64) * 2.0 ** -53
        return (low + (high - low) * u).reshape(shape)

    def integers(self, high: int) -> int:
        """Integer in [0, high)."""
        return min(int(self.uniform() * high), high - 1)

    def spawn(self, tag: int) -> "SplitMix64":
        """Independent child stream keyed by ``tag``; does not advance this stream."""
        z = np.array([(self.state ^ (int(tag) * GAMMA)) & MASK64], dtype=np.uint64)
        with np.errstate(over="ignore"):
            return SplitMix64(int(_mix(z)[0]))
