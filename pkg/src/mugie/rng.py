"""Seeded, platform-independent random draws.

The bit source is PCG64 (numpy's implementation, seeded through
``SeedSequence``), whose raw 64-bit stream is stable across platforms and
numpy releases.  Bounded integers and weighted choices are derived from
that raw stream here rather than through numpy's samplers, whose
algorithms are not covered by the same stability promise.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import numpy as np

U64 = 1 << 64


class Rng:
    def __init__(self, seed: int):
        if not 0 <= seed < U64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
        self.seed = seed
        self._bits = np.random.PCG64(seed)

    def next_u64(self) -> int:
        return int(self._bits.random_raw())

    def below(self, n: int) -> int:
        """Uniform integer in ``[0, n)`` by rejection sampling."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = U64 - U64 % n
        while True:
            r = self.next_u64()
            if r < limit:
                return r % n

    def unit(self) -> Fraction:
        """Uniform rational in ``[0, 1)`` with 53 bits of resolution."""
        return Fraction(self.next_u64() >> 11, 1 << 53)

    def weighted_index(self, weights: Sequence) -> int:
        """Index ``i`` with probability ``weights[i] / sum(weights)`` (cumulative inversion)."""
        exact = [Fraction(w) for w in weights]
        total = sum(exact)
        if total <= 0:
            raise ValueError("at least one weight must be positive")
        u = self.unit() * total
        acc = Fraction(0)
        for i, w in enumerate(exact):
            if w <= 0:
                continue
            acc += w
            if u < acc:
                return i
        raise AssertionError("unreachable: u < total")
