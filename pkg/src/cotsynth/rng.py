"""SplitMix64: a tiny portable generator with a 64-bit state.

Used wherever a seed must reproduce the same sequence on every platform and
in every implementation; numpy's generators are not pinned across versions
for all derived methods.
"""

from __future__ import annotations

from typing import Sequence

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        return _mix(self.state)

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def randbelow(self, n: int) -> int:
        """Unbiased integer in [0, n) by rejection."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = ((1 << 64) // n) * n
        while True:
            z = self.next_u64()
            if z < limit:
                return z % n

    def choice_weighted(self, weights: Sequence[float]) -> int:
        total = sum(weights)
        u = self.random() * total
        acc = 0.0
        for i, w in enumerate(weights):
            acc += w
            if u < acc:
                return i
        # u landed on the rounding slack at the top end
        return max(i for i, w in enumerate(weights) if w > 0)

    def spawn(self, stream: int) -> "SplitMix64":
        """Independent generator for a numbered sub-stream."""
        return SplitMix64(_mix((self.state ^ _mix(stream + 1)) & MASK64))
