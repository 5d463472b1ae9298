"""Deterministic 64-bit RNG used wherever reproducibility is contractual.

splitmix64 with a keyed substream derivation: substreams are pure functions
of (seed, index), so work split across trees, runs, or classes is
schedule-independent. The compiled kernels (kernels/_core.pyx) carry a C copy
of exactly this arithmetic; any change here must be mirrored there.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def mix64(x: int) -> int:
    """splitmix64 finalizer; bijective on 64-bit ints."""
    x &= MASK64
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & MASK64
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & MASK64
    x ^= x >> 31
    return x


def substream(seed: int, index: int) -> int:
    """Seed for the index-th independent substream of `seed`."""
    return mix64((seed & MASK64) ^ mix64(((index + 1) * GOLDEN) & MASK64))


class Rng:
    """splitmix64 stream."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        return mix64(self.state)

    def below(self, n: int) -> int:
        """Uniform int in [0, n) via the multiply-high reduction."""
        return (self.next_u64() * n) >> 64

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates."""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]

    def sample_indices(self, n: int, k: int) -> list[int]:
        """k distinct ints from [0, n), ascending. Consumes exactly k draws."""
        pool = list(range(n))
        for i in range(k):
            j = i + self.below(n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return sorted(pool[:k])
