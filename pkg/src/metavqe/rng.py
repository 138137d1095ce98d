"""Portable seeded random numbers via SplitMix64.

Random initialization and Lanczos start vectors must reproduce bit-for-bit
across platforms and library versions, so this module pins the generator to
SplitMix64 (Steele, Lea & Flood's 64-bit mixing function) instead of relying
on whatever numpy's default generator happens to be.
"""

from __future__ import annotations

import numpy as np

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    """Deterministic 64-bit generator with a single-word state."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def uniform(self, low: float, high: float, size: int) -> np.ndarray:
        """Array of doubles drawn uniformly from [low, high)."""
        out = np.empty(size, dtype=np.float64)
        span = high - low
        for i in range(size):
            # Top 53 bits give a uniform double in [0, 1).
            out[i] = low + span * ((self.next_u64() >> 11) * 2.0**-53)
        return out


def derive_seed(*parts: int) -> int:
    """Mix several integers into one well-spread 64-bit seed.

    Used to give each (experiment seed, test point, restart) combination an
    independent stream without correlated low bits.
    """
    mixer = SplitMix64(0)
    acc = 0
    for p in parts:
        mixer._state = (acc ^ (p & _MASK64)) & _MASK64
        acc = mixer.next_u64()
    return acc
