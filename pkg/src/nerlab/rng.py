"""Portable seeded randomness: SplitMix64 seeding feeding a PCG32 generator.

Both generators are pinned so that exact corruption outputs can be compared
across runs, platforms and implementations; never substitute ``random``.
"""
from __future__ import annotations

from typing import MutableSequence, TypeVar

MASK64 = (1 << 64) - 1
MASK32 = (1 << 32) - 1

T = TypeVar("T")


class SplitMix64:
    """SplitMix64 stream (Steele, Lea & Flood); used to expand one seed into many."""

    GAMMA = 0x9E3779B97F4A7C15

    def __init__(self, seed: int) -> None:
        self.state = seed & MASK64

    def next(self) -> int:
        self.state = (self.state + self.GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)


def splitmix64(seed: int, n: int = 1) -> list[int]:
    """Return the first ``n`` SplitMix64 outputs for ``seed``."""
    sm = SplitMix64(seed)
    return [sm.next() for _ in range(n)]


class Pcg32:
    """PCG32 (XSH-RR, 64-bit state) on the default stream.

    The user seed is scrambled with one SplitMix64 round before the standard
    ``pcg32_srandom_r`` initialisation.
    """

    MULTIPLIER = 6364136223846793005
    INCREMENT = 1442695040888963407

    def __init__(self, seed: int) -> None:
        if seed < 0:
            raise ValueError("seed must be a non-negative integer")
        self._srandom(splitmix64(seed)[0], self.INCREMENT)

    def _srandom(self, init_state: int, increment: int) -> None:
        self.increment = increment | 1
        self.state = 0
        self.next_u32()
        self.state = (self.state + init_state) & MASK64
        self.next_u32()

    @classmethod
    def from_raw(cls, init_state: int, stream: int) -> "Pcg32":
        """Unscrambled ``pcg32_srandom_r(init_state, stream)``; for cross-checking reference vectors."""
        rng = cls.__new__(cls)
        rng._srandom(init_state & MASK64, ((stream << 1) | 1) & MASK64)
        return rng

    def next_u32(self) -> int:
        old = self.state
        self.state = (old * self.MULTIPLIER + self.increment) & MASK64
        xorshifted = (((old >> 18) ^ old) >> 27) & MASK32
        rot = old >> 59
        return ((xorshifted >> rot) | (xorshifted << ((-rot) & 31))) & MASK32

    def below(self, bound: int) -> int:
        """Uniform integer in ``[0, bound)`` without modulo bias (``pcg32_boundedrand_r``)."""
        if not 0 < bound <= MASK32 + 1:
            raise ValueError(f"bound out of range: {bound}")
        threshold = (MASK32 + 1 - bound) % bound
        while True:
            r = self.next_u32()
            if r >= threshold:
                return r % bound

    def shuffle(self, items: MutableSequence[T]) -> None:
        """In-place Fisher-Yates (Durstenfeld) shuffle, highest index first."""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]

    def permutation(self, n: int) -> list[int]:
        order = list(range(n))
        self.shuffle(order)
        return order
