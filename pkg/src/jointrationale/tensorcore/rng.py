"""SplitMix64 pseudo-random generator.

The generator keeps a single 64-bit counter. Each draw advances the counter by
the golden-ratio increment ``0x9E3779B97F4A7C15`` and passes it through the
finalizer of Steele, Lea & Flood (2014)::

    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    z =  z ^ (z >> 31)

Floats in [0, 1) take the top 53 bits: ``(z >> 11) * 2**-53``. Because the
output at position ``i`` depends only on ``state + (i + 1) * increment``,
bulk draws are computed in closed form with numpy and are bit-identical to
the same number of scalar draws.
"""

from __future__ import annotations

from typing import MutableSequence, TypeVar

import numpy as np

T = TypeVar("T")

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
ALGORITHM = "splitmix64"


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * MIX1) & MASK64
    z = ((z ^ (z >> 27)) * MIX2) & MASK64
    return z ^ (z >> 31)


def _mix_array(z: np.ndarray) -> np.ndarray:
    # uint64 array arithmetic wraps modulo 2**64
    z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX2)
    return z ^ (z >> np.uint64(31))


class Rng:
    """Deterministic, splittable generator with a 64-bit state."""

    __slots__ = ("state",)

    def __init__(self, seed: int = 0):
        self.state = int(seed) & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GAMMA) & MASK64
        return _mix(self.state)

    def uniform(self) -> float:
        """One float in [0, 1)."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniform_array(self, n: int) -> np.ndarray:
        """``n`` floats in [0, 1); identical to ``n`` calls of :meth:`uniform`."""
        if n <= 0:
            return np.zeros(0)
        steps = np.arange(1, n + 1, dtype=np.uint64) * np.uint64(GAMMA)
        z = _mix_array(steps + np.uint64(self.state))
        self.state = (self.state + n * GAMMA) & MASK64
        return (z >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))

    def below(self, n: int) -> int:
        """Integer in [0, n)."""
        if n <= 0:
            raise ValueError(f"below() needs n > 0, got {n}")
        return min(int(self.uniform() * n), n - 1)

    def choice(self, items):
        return items[self.below(len(items))]

    def shuffle(self, items: MutableSequence[T]) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]

    def split(self) -> "Rng":
        """Independent child stream; advances this generator by one draw."""
        return Rng(_mix(self.next_u64() ^ MIX2))

    def getstate(self) -> int:
        return self.state

    def setstate(self, state: int) -> None:
        self.state = int(state) & MASK64

    def __repr__(self) -> str:
        return f"Rng(state={self.state:#018x})"


def rng_uniform(rng: Rng) -> float:
    return rng.uniform()
