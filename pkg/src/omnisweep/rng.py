"""Deterministic random numbers from a SplitMix64 counter stream.

Every random draw in this package comes from SplitMix64: output number k
(0-based) of a stream seeded with ``s`` is ``mix64(s + (k + 1) * GOLDEN)``
where ``mix64`` is the avalanching finalizer below.  Outputs are a pure
function of (seed, counter), so any value can be reproduced statelessly,
in parallel, and bit-identically across runs.

Floats in [0, 1) take the top 53 bits of the 64-bit output; the open
(0, 1) variant adds half an ulp so ``log`` never sees zero.  Bounded ints
use a plain modulo (documented; the bias is ~range/2^64).
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_MULT1 = 0xBF58476D1CE4E5B9
_MULT2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    """SplitMix64 finalizer: an avalanching bijection on 64-bit ints."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MULT1) & MASK64
    z = ((z ^ (z >> 27)) * _MULT2) & MASK64
    return z ^ (z >> 31)


def mix_seed(*parts: int) -> int:
    """Fold integers into a single 64-bit seed (order-sensitive)."""
    h = 0
    for p in parts:
        h = (h + GOLDEN) & MASK64
        h = mix64(h ^ (p & MASK64))
    return h


def tag_seed(seed: int, tag: str) -> int:
    """Derive a role-specific seed from a global seed and a text tag."""
    return mix_seed(seed, *tag.encode("utf-8"))


class SplitMix64:
    """Sequential view of the stream: next_u64() walks counters 0, 1, 2, ...

    Output k of ``SplitMix64(s)`` equals ``stream_u64(s, [k])[0]``.
    """

    def __init__(self, seed: int):
        self._state = seed & MASK64

    def next_u64(self) -> int:
        self._state = (self._state + GOLDEN) & MASK64
        return mix64(self._state)

    def next_float(self) -> float:
        """Uniform in [0, 1)."""
        return (self.next_u64() >> 11) * 2.0**-53

    def next_open01(self) -> float:
        """Uniform in (0, 1); safe to pass through log()."""
        return ((self.next_u64() >> 11) + 0.5) * 2.0**-53

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.next_float()

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi], both ends inclusive."""
        if hi < lo:
            raise ValueError("randint: hi < lo")
        return lo + self.next_u64() % (hi - lo + 1)


def _mix64_np(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MULT1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MULT2)
    return z ^ (z >> np.uint64(31))


def stream_u64(seed: int, counters) -> np.ndarray:
    """Vectorized stream: element i is output ``counters[i]`` of the seed's stream."""
    c = np.asarray(counters, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(seed & MASK64) + (c + np.uint64(1)) * np.uint64(GOLDEN)
        return _mix64_np(z)


def stream_unit(seed: int, counters) -> np.ndarray:
    """Vectorized uniforms in [0, 1)."""
    return (stream_u64(seed, counters) >> np.uint64(11)).astype(np.float64) * 2.0**-53


def stream_open_unit(seed: int, counters) -> np.ndarray:
    """Vectorized uniforms in (0, 1)."""
    u = (stream_u64(seed, counters) >> np.uint64(11)).astype(np.float64)
    return (u + 0.5) * 2.0**-53


def stream_gumbel(seed: int, counters) -> np.ndarray:
    """Vectorized standard Gumbel(0, 1) draws via -log(-log(u))."""
    return -np.log(-np.log(stream_open_unit(seed, counters)))


def hash_u64(values: np.ndarray) -> np.ndarray:
    """Hash an arbitrary uint64 array elementwise (for lattice noise)."""
    with np.errstate(over="ignore"):
        return _mix64_np(np.asarray(values, dtype=np.uint64))
