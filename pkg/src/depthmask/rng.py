"""Portable pseudo-random streams for scene generation.

The generator is xoshiro256** (Blackman & Vigna), its 256-bit state filled by
four successive outputs of splitmix64 started at the 64-bit seed. Derived
quantities are fixed so that a reimplementation in any language reproduces
the same streams bit for bit:

* ``uniform()``: ``(next() >> 11) * 2**-53``, in ``[0, 1)``
* ``uniform(a, b)``: ``a + (b - a) * uniform()``
* ``integers(n)``: ``floor(uniform() * n)``
* ``normal()``: Box-Muller on two consecutive uniforms ``u1, u2``,
  ``sqrt(-2 ln(1 - u1)) * cos(2 pi u2)``; the sine branch is discarded.
"""

from __future__ import annotations

import math

import numpy as np

MASK64 = (1 << 64) - 1
_INV_2_53 = 1.0 / (1 << 53)


def splitmix64(state: int) -> tuple[int, int]:
    """One splitmix64 step: returns ``(new_state, output)``."""
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


class Xoshiro256:
    __slots__ = ("s",)

    def __init__(self, seed: int):
        sm = seed & MASK64
        s = []
        for _ in range(4):
            sm, out = splitmix64(sm)
            s.append(out)
        self.s = s

    def next(self) -> int:
        s0, s1, s2, s3 = self.s
        result = (_rotl((s1 * 5) & MASK64, 7) * 9) & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self.s = [s0, s1, s2, s3]
        return result

    def uniform(self, low: float = 0.0, high: float = 1.0) -> float:
        return low + (high - low) * ((self.next() >> 11) * _INV_2_53)

    def integers(self, n: int) -> int:
        return math.floor(self.uniform() * n)

    def normal(self) -> float:
        u1 = self.uniform()
        u2 = self.uniform()
        return math.sqrt(-2.0 * math.log(1.0 - u1)) * math.cos(2.0 * math.pi * u2)

    def normal_array(self, shape: tuple[int, ...]) -> np.ndarray:
        """Row-major array of :meth:`normal` draws (bit-identical to calling it
        in a loop)."""
        n = int(np.prod(shape))
        return np.array([self.normal() for _ in range(n)], dtype=np.float64).reshape(shape)
