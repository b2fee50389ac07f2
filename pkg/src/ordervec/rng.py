"""Seeded, platform-independent random numbers for reproducible training runs.

Everything random in this package flows from a single 64-bit seed through a
splitmix-style counter generator: output n is ``mix64(seed + (n+1)*GOLDEN)``.
Because the generator is counter-based it vectorizes in numpy without any
sequential state, and the same seed produces the same bits on every platform
and numpy version.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    """Finalizing mixer of splitmix64; bijective on 64-bit ints."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return (z ^ (z >> 31)) & MASK64


def derive_seed(base: int, salt: int) -> int:
    """Deterministically derive a child seed from (base, salt).

    Used to give every epoch shuffle and every per-offset training run its
    own independent stream; negative salts (signed window offsets) are mapped
    through their 64-bit two's complement.
    """
    return mix64((base & MASK64) ^ mix64((salt & MASK64) + GOLDEN))


def random_uint64(seed: int, n: int) -> np.ndarray:
    """First ``n`` raw 64-bit outputs of the stream for ``seed``."""
    counters = np.arange(1, n + 1, dtype=np.uint64) * np.uint64(GOLDEN)
    z = np.uint64(seed & MASK64) + counters  # wraps mod 2**64
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


def random_uniform(seed: int, n: int) -> np.ndarray:
    """``n`` doubles uniform in [0, 1), from the top 53 bits of each output."""
    return (random_uint64(seed, n) >> np.uint64(11)) * 2.0**-53
