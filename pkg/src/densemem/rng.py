"""Seedable, bit-reproducible random streams.

xoshiro256** seeded by SplitMix64 expansion; bounded integers use Lemire's
multiply-shift with rejection. The scalar routines are numba-compiled so the
simulation kernels and Python callers consume the very same stream.
"""

from __future__ import annotations

import numpy as np
from numba import njit

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3

_GAMMA = np.uint64(GOLDEN_GAMMA)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_U5 = np.uint64(5)
_U9 = np.uint64(9)
_U17 = np.uint64(17)
_U32 = np.uint64(32)
_LO32 = np.uint64(0xFFFFFFFF)


def splitmix64_mix(z: int) -> int:
    """SplitMix64 output function (no state increment)."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def splitmix64_next(state: int) -> tuple[int, int]:
    """Advance a SplitMix64 state; returns ``(new_state, output)``."""
    state = (state + GOLDEN_GAMMA) & MASK64
    return state, splitmix64_mix(state)


def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET
    for b in data:
        h = ((h ^ b) * FNV_PRIME) & MASK64
    return h


def derive_seed(master_seed: int, tag: str, point_index: int, trial_index: int) -> int:
    """Per-trial 64-bit seed, independent of execution order.

    The tag hash is FNV-1a with the offset basis folded out, so an empty tag
    contributes zero and ``derive_seed(0, "", 0, 0)`` is the first SplitMix64
    output from state 0 (0xE220A8397B1DCDAF).
    """
    z = master_seed & MASK64
    z ^= fnv1a64(tag.encode("utf-8")) ^ FNV_OFFSET
    z ^= (point_index * GOLDEN_GAMMA) & MASK64
    z ^= trial_index & MASK64
    return splitmix64_next(z)[1]


def seed_state(seed: int) -> np.ndarray:
    """Expand a 64-bit seed into a xoshiro256 state (four SplitMix64 outputs)."""
    s = seed & MASK64
    words = []
    for _ in range(4):
        s, out = splitmix64_next(s)
        words.append(out)
    return np.array(words, dtype=np.uint64)


@njit(cache=True, nogil=True)
def _rotl(x, k):
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


@njit(cache=True, nogil=True)
def next_u64(s):
    s0 = s[0]
    s1 = s[1]
    s2 = s[2]
    s3 = s[3]
    result = _rotl(s1 * _U5, 7) * _U9
    t = s1 << _U17
    s2 ^= s0
    s3 ^= s1
    s1 ^= s2
    s0 ^= s3
    s2 ^= t
    s3 = _rotl(s3, 45)
    s[0] = s0
    s[1] = s1
    s[2] = s2
    s[3] = s3
    return result


@njit(cache=True, nogil=True)
def _mul128(a, b):
    # (high, low) 64-bit halves of a*b
    a_lo = a & _LO32
    a_hi = a >> _U32
    b_lo = b & _LO32
    b_hi = b >> _U32
    ll = a_lo * b_lo
    lh = a_lo * b_hi
    hl = a_hi * b_lo
    hh = a_hi * b_hi
    mid = (ll >> _U32) + (lh & _LO32) + (hl & _LO32)
    high = hh + (lh >> _U32) + (hl >> _U32) + (mid >> _U32)
    low = (mid << _U32) | (ll & _LO32)
    return high, low


@njit(cache=True, nogil=True)
def bounded(s, n):
    """Uniform integer in [0, n) for 1 <= n < 2**63."""
    bound = np.uint64(n)
    high, low = _mul128(next_u64(s), bound)
    if low < bound:
        threshold = (np.uint64(0) - bound) % bound
        while low < threshold:
            high, low = _mul128(next_u64(s), bound)
    return np.int64(high)


@njit(cache=True, nogil=True)
def uniform(s):
    """Double in [0, 1) from the top 53 bits."""
    return np.float64(next_u64(s) >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@njit(cache=True, nogil=True)
def shuffle_inplace(s, arr):
    for i in range(arr.shape[0] - 1, 0, -1):
        j = bounded(s, i + 1)
        tmp = arr[i]
        arr[i] = arr[j]
        arr[j] = tmp


@njit(cache=True, nogil=True)
def partial_shuffle(s, arr, k):
    """Move a uniform random k-subset of ``arr`` into ``arr[:k]``."""
    m = arr.shape[0]
    for i in range(k):
        j = i + bounded(s, m - i)
        tmp = arr[i]
        arr[i] = arr[j]
        arr[j] = tmp


class Xoshiro256:
    """xoshiro256** generator whose state is shared with the numba kernels."""

    def __init__(self, seed: int = 42):
        self.state = seed_state(seed)

    @classmethod
    def from_state(cls, words) -> "Xoshiro256":
        rng = cls.__new__(cls)
        rng.state = np.array([int(w) & MASK64 for w in words], dtype=np.uint64)
        if not rng.state.any():
            raise ValueError("xoshiro256 state must not be all zero")
        return rng

    def next_u64(self) -> int:
        return int(next_u64(self.state))

    def bounded(self, n: int) -> int:
        if n < 1:
            raise ValueError("bound must be positive")
        return int(bounded(self.state, n))

    def random(self) -> float:
        return float(uniform(self.state))

    def shuffle(self, arr: np.ndarray) -> None:
        shuffle_inplace(self.state, arr)

    def sample(self, population: int, k: int) -> np.ndarray:
        """k distinct indices from range(population), in draw order."""
        if not 0 <= k <= population:
            raise ValueError("sample size out of range")
        idx = np.arange(population, dtype=np.int64)
        partial_shuffle(self.state, idx, k)
        return idx[:k].copy()
