"""Portable counter-based randomness.

Every random draw in the package is ``splitmix64`` applied to a key derived
from (seed, stream, counters). The mixing function is the standard
SplitMix64 finalizer (Steele, Lea & Flood 2014), so any implementation can
reproduce the same draws bit for bit:

    z = (x + 0x9E3779B97F4A7C15) mod 2^64
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 mod 2^64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB mod 2^64
    return z ^ (z >> 31)

Keys are folded left to right: ``h = splitmix64(seed)``, then for each part
``h = splitmix64(h ^ part)``. Uniform floats take the top 53 bits.
"""

from __future__ import annotations

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15

# Stream tags keep unrelated uses of one seed independent.
STREAM_SPIKE = 1
STREAM_RANDOM_FIT = 2
STREAM_POPULATION = 3


def splitmix64(x: int) -> int:
    z = (x + GOLDEN) & MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


def hash_key(seed: int, *parts: int) -> int:
    h = splitmix64(seed & MASK)
    for p in parts:
        h = splitmix64(h ^ (p & MASK))
    return h


def uniform(seed: int, *parts: int) -> float:
    """Uniform float in [0, 1) determined by the key."""
    return (hash_key(seed, *parts) >> 11) * (1.0 / (1 << 53))


def below(n: int, seed: int, *parts: int) -> int:
    """Integer in [0, n) by rejection sampling on the 64-bit hash."""
    if n <= 0:
        raise ValueError("n must be positive")
    limit = (1 << 64) - ((1 << 64) % n)
    attempt = 0
    while True:
        h = hash_key(seed, *parts, attempt)
        if h < limit:
            return h % n
        attempt += 1
