"""Deterministic 64-bit randomness for sampling and trial seeding.

Everything here is built on the SplitMix64 finalizer, used in counter mode:
a draw is a pure function of (seed, counter), so sampled streams are
bit-identical no matter how work is batched or spread across processes.
Bounded draws use exact rejection, never a biased modulo.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# Domain constants keep child seeds, stream draws and tie coins on
# non-overlapping counter sequences.
_DOM_CHILD = 0xD1B54A32D192ED03
_DOM_SAMPLE = 0x8CB92BA72F3D8DD7


def mix64(x: int) -> int:
    """SplitMix64 finalizer (Stafford variant 13)."""
    x &= MASK64
    x = ((x ^ (x >> 30)) * _MIX1) & MASK64
    x = ((x ^ (x >> 27)) * _MIX2) & MASK64
    return x ^ (x >> 31)


def child_seed(seed: int, index: int) -> int:
    """Derive the index-th child of a master seed (one per trial).

    Children are order-independent: child(seed, 7) is the same value whether
    or not children 0..6 were ever derived.
    """
    if index < 0:
        raise ValueError("child index must be >= 0")
    return mix64((mix64(seed ^ _DOM_CHILD) + GOLDEN * (index + 1)) & MASK64)


def _mix64_np(x: np.ndarray) -> np.ndarray:
    x = x ^ (x >> np.uint64(30))
    x = x * np.uint64(_MIX1)
    x = x ^ (x >> np.uint64(27))
    x = x * np.uint64(_MIX2)
    return x ^ (x >> np.uint64(31))


def sample_uniform(seed: int, count: int, bound: int) -> np.ndarray:
    """`count` i.i.d. uniform draws from [0, bound) as an int64 array.

    Draw t uses counters t, t+count, t+2*count, ... until one falls below the
    rejection limit, so the result does not depend on batching.
    """
    if bound <= 0:
        raise ValueError("bound must be positive")
    if count < 0:
        raise ValueError("count must be >= 0")
    out = np.empty(count, dtype=np.int64)
    if count == 0:
        return out
    base = np.uint64(mix64(seed ^ _DOM_SAMPLE))
    limit = ((1 << 64) // bound) * bound  # accept x < limit; exact uniformity
    accept_all = limit > MASK64
    pending = np.arange(count, dtype=np.uint64)
    attempt = 0
    while pending.size:
        ctr = base + np.uint64(GOLDEN) * (
            np.uint64(attempt) * np.uint64(count) + pending + np.uint64(1)
        )
        x = _mix64_np(ctr)
        if accept_all:
            ok = np.ones(x.size, dtype=bool)
        else:
            ok = x < np.uint64(limit)
        out[pending[ok].astype(np.int64)] = (x[ok] % np.uint64(bound)).astype(np.int64)
        pending = pending[~ok]
        attempt += 1
        if attempt > 128:  # rejection prob < 2^-64 * bound; this never trips
            raise RuntimeError("rejection sampling failed to converge")
    return out


class Rng:
    """Small sequential SplitMix64 stream for shuffles and coin flips."""

    def __init__(self, seed: int):
        self._state = mix64(seed ^ _DOM_CHILD) ^ GOLDEN

    def next_u64(self) -> int:
        self._state = (self._state + GOLDEN) & MASK64
        return mix64(self._state)

    def next_below(self, bound: int) -> int:
        """Uniform integer in [0, bound), rejection-exact."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        limit = ((1 << 64) // bound) * bound
        while True:
            x = self.next_u64()
            if x < limit:
                return x % bound

    def coin(self) -> int:
        return self.next_u64() >> 63

    def coins(self, count: int) -> np.ndarray:
        """`count` fair bits as a uint8 array."""
        return np.fromiter(
            ((self.next_u64() >> 63) for _ in range(count)), dtype=np.uint8, count=count
        )

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates."""
        for i in range(len(items) - 1, 0, -1):
            j = self.next_below(i + 1)
            items[i], items[j] = items[j], items[i]
