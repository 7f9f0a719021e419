"""Portable deterministic randomness: a 64-bit mixing hash and an xorshift stream.

Every stochastic element of a run (objective noise, ruler draws, candidate
picks, dataset permutations) is driven by streams seeded through
``derive_u64``, so a run is a pure function of its master seed.
"""

from __future__ import annotations

import math

MASK64 = (1 << 64) - 1

_GOLDEN = 0x9E3779B97F4A7C15
_MIX_A = 0xFF51AFD7ED558CCD
_MIX_B = 0xC4CEB9FE1A85EC53


def mix64(z: int) -> int:
    """Avalanche finalizer: every input bit affects every output bit."""
    z &= MASK64
    z = ((z ^ (z >> 33)) * _MIX_A) & MASK64
    z = ((z ^ (z >> 33)) * _MIX_B) & MASK64
    return z ^ (z >> 33)


def derive_u64(master: int, *components: int) -> int:
    """Hash a master seed and integer components into one 64-bit value.

    Components are folded in sequentially with distinct multipliers so that
    (a, b) and (b, a) land far apart.
    """
    h = mix64(master ^ _GOLDEN)
    for i, c in enumerate(components):
        h = mix64(h ^ (((c & MASK64) + 1) * (_GOLDEN + 2 * i + 1) & MASK64))
    return h


class XorShift64Star:
    """xorshift64* stream; tiny, fully specified, portable across languages.

    State must be nonzero; zero seeds are remapped to a fixed constant.
    """

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64 or _GOLDEN

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x = (x ^ (x << 25)) & MASK64
        x ^= x >> 27
        self.state = x
        return (x * 0x2545F4914F6CDD1D) & MASK64

    def next_float(self) -> float:
        """Uniform in [0, 1) with 53-bit resolution."""
        return (self.next_u64() >> 11) * 2.0**-53

    def uniform(self, a: float, b: float) -> float:
        return a + (b - a) * self.next_float()

    def randint(self, n: int) -> int:
        """Uniform integer in [0, n), bias-free via rejection."""
        if n <= 0:
            raise ValueError("randint requires n >= 1")
        threshold = (1 << 64) - ((1 << 64) % n)
        while True:
            u = self.next_u64()
            if u < threshold:
                return u % n

    def normal(self) -> float:
        """Standard normal via Box-Muller; consumes exactly two draws."""
        # +1 keeps u1 in (0, 1] so the log is finite.
        u1 = ((self.next_u64() >> 11) + 1) * 2.0**-53
        u2 = (self.next_u64() >> 11) * 2.0**-53
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def shuffle_prefix(self, items: list, k: int) -> list:
        """Partial Fisher-Yates: first k entries become a uniform sample
        without replacement; mutates and returns ``items``."""
        n = len(items)
        for i in range(min(k, n - 1)):
            j = i + self.randint(n - i)
            items[i], items[j] = items[j], items[i]
        return items
