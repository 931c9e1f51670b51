"""Exact-arithmetic dense associative memory model.

The potential of a state is ``F(x) = sum_mu (M^mu)^n / N^(n-1)`` where
``M^mu = <xi^mu, x>`` is the unnormalized overlap; the energy is ``-F``.
Every sign decision works on integer numerators, so ties are detected exactly.

Indices (neurons ``i``, patterns ``mu``) are 0-based throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from math import comb

import numpy as np

INT64_MAX = 2**63 - 1
INT128_MAX = 2**127 - 1
MAX_ORDER = 8


@dataclass(frozen=True)
class ModelParams:
    """Interaction order ``n``, neuron count ``N`` and pattern count ``p``."""

    n: int
    N: int
    p: int

    def __post_init__(self):
        for name in ("n", "N", "p"):
            if not isinstance(getattr(self, name), (int, np.integer)):
                raise TypeError(f"{name} must be an integer")
        if self.n < 2:
            raise ValueError("interaction order n must be >= 2")
        if self.n > MAX_ORDER:
            raise ValueError(f"interaction order n must be <= {MAX_ORDER}")
        if self.N < 1 or self.p < 1:
            raise ValueError("N and p must be >= 1")
        if self.p * (self.N + 1) ** self.n > INT128_MAX:
            raise OverflowError(
                f"p*(N+1)^n exceeds the 128-bit accumulator for n={self.n}, N={self.N}, p={self.p}"
            )

    @property
    def scale(self) -> int:
        """Implicit denominator N^(n-1) of potentials and marginal fields."""
        return self.N ** (self.n - 1)

    @property
    def fits_int64(self) -> bool:
        """Whether every numerator fits a signed 64-bit accumulator."""
        return self.p * (self.N + 1) ** self.n <= INT64_MAX

    @cached_property
    def field_coefficients(self) -> tuple[int, ...]:
        # coef[j] multiplies S^j in sum_k C(n, 2k+1) S^(n-2k-1)
        coef = [0] * self.n
        for k in range((self.n - 1) // 2 + 1):
            coef[self.n - 2 * k - 1] = comb(self.n, 2 * k + 1)
        return tuple(coef)


@dataclass(frozen=True, eq=False)
class PatternSet:
    """``p`` stored patterns of length ``N`` with entries in {-1, +1}."""

    params: ModelParams
    patterns: np.ndarray

    def __post_init__(self):
        pats = np.asarray(self.patterns)
        if pats.shape != (self.params.p, self.params.N):
            raise ValueError(
                f"pattern matrix has shape {pats.shape}, expected {(self.params.p, self.params.N)}"
            )
        if not np.all((pats == 1) | (pats == -1)):
            raise ValueError("pattern entries must be exactly -1 or +1")
        pats = np.ascontiguousarray(pats, dtype=np.int8)
        pats.setflags(write=False)
        object.__setattr__(self, "patterns", pats)

    @classmethod
    def from_array(cls, patterns, n: int = 3) -> "PatternSet":
        arr = np.atleast_2d(np.asarray(patterns))
        return cls(ModelParams(n=n, N=arr.shape[1], p=arr.shape[0]), arr)

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def N(self) -> int:
        return self.params.N

    @property
    def p(self) -> int:
        return self.params.p

    @cached_property
    def columns(self) -> np.ndarray:
        """N x p contiguous copy so one neuron's column is a contiguous read."""
        cols = np.ascontiguousarray(self.patterns.T)
        cols.setflags(write=False)
        return cols

    def with_order(self, n: int) -> "PatternSet":
        return PatternSet(ModelParams(n=n, N=self.N, p=self.p), self.patterns)

    def __eq__(self, other):
        if not isinstance(other, PatternSet):
            return NotImplemented
        return self.params == other.params and np.array_equal(self.patterns, other.patterns)

    __hash__ = None


def _accumulator_dtype(params: ModelParams):
    return np.int64 if params.fits_int64 else object


@dataclass
class NetworkState:
    """Spin vector ``x`` plus the cache ``M[mu] = <xi^mu, x>``."""

    x: np.ndarray
    M: np.ndarray = field(repr=False)

    @classmethod
    def from_spins(cls, x, patterns: PatternSet) -> "NetworkState":
        spins = np.array(x, dtype=np.int8).reshape(-1)
        if spins.shape[0] != patterns.N:
            raise ValueError(f"state has length {spins.shape[0]}, expected {patterns.N}")
        if not np.all((spins == 1) | (spins == -1)):
            raise ValueError("spins must be exactly -1 or +1")
        state = cls(spins, np.zeros(patterns.p, dtype=_accumulator_dtype(patterns.params)))
        return rebuild_cache(state, patterns)

    def copy(self) -> "NetworkState":
        return NetworkState(self.x.copy(), self.M.copy())


@dataclass(frozen=True)
class PhiValue:
    """Discrete marginal field ``phi_i = numerator / scale``."""

    numerator: int
    scale: int

    @property
    def value(self) -> Fraction:
        return Fraction(self.numerator, self.scale)

    @property
    def sign(self) -> int:
        return (self.numerator > 0) - (self.numerator < 0)

    def __float__(self) -> float:
        return self.numerator / self.scale


def _check_neuron(patterns: PatternSet, i: int) -> None:
    if not 0 <= i < patterns.N:
        raise IndexError(f"neuron index {i} out of range [0, {patterns.N})")


def _check_pattern(patterns: PatternSet, mu: int) -> None:
    if not 0 <= mu < patterns.p:
        raise IndexError(f"pattern index {mu} out of range [0, {patterns.p})")


def _exact_dot(a: np.ndarray, b: np.ndarray) -> int:
    if a.dtype == object or b.dtype == object:
        return int(sum(int(u) * int(v) for u, v in zip(a, b)))
    return int(np.dot(a.astype(np.int64), b.astype(np.int64)))


def rebuild_cache(state: NetworkState, patterns: PatternSet) -> NetworkState:
    """Recompute every overlap from scratch (the coherence oracle)."""
    M = patterns.patterns.astype(np.int64) @ state.x.astype(np.int64)
    if not patterns.params.fits_int64:
        M = np.array([int(v) for v in M], dtype=object)
    state.M = M
    return state


def overlap(state: NetworkState, patterns: PatternSet, mu: int) -> float:
    """Normalized overlap m^mu = M^mu / N."""
    _check_pattern(patterns, mu)
    return int(state.M[mu]) / patterns.N


def matching_fraction(state: NetworkState, patterns: PatternSet, mu: int) -> float:
    """Fraction of neurons agreeing with pattern ``mu``: (1 + m^mu) / 2."""
    _check_pattern(patterns, mu)
    return ((patterns.N + int(state.M[mu])) // 2) / patterns.N


def potential_numerator(state: NetworkState, params: ModelParams) -> int:
    """Exact numerator sum_mu (M^mu)^n of the potential."""
    return sum(int(m) ** params.n for m in state.M)


def potential(state: NetworkState, params: ModelParams) -> Fraction:
    return Fraction(potential_numerator(state, params), params.scale)


def energy(state: NetworkState, params: ModelParams) -> Fraction:
    return -potential(state, params)


def _field_poly(S, coef):
    poly = coef[-1]
    for c in reversed(coef[:-1]):
        poly = poly * S + c
    return poly


def phi(state: NetworkState, patterns: PatternSet, i: int) -> PhiValue:
    """Marginal field of neuron ``i``; depends only on the other spins."""
    _check_neuron(patterns, i)
    params = patterns.params
    col = patterns.columns[i]
    xi = int(state.x[i])
    coef = params.field_coefficients
    if params.fits_int64:
        a = col.astype(np.int64)
        num = int(np.dot(a, _field_poly(state.M - a * xi, coef)))
    else:
        num = 0
        for a, m in zip(col.tolist(), state.M.tolist()):
            num += a * _field_poly(int(m) - a * xi, coef)
    return PhiValue(num, params.scale)


def phi_all(state: NetworkState, patterns: PatternSet) -> np.ndarray:
    """Numerators Phi_i for every neuron, evaluated against the current state."""
    params = patterns.params
    cols = patterns.columns
    if params.fits_int64:
        S = state.M[None, :] - cols.astype(np.int64) * state.x.astype(np.int64)[:, None]
        poly = _field_poly(S, params.field_coefficients)
        return np.einsum("ij,ij->i", cols.astype(np.int64), poly)
    return np.array([phi(state, patterns, i).numerator for i in range(params.N)], dtype=object)


def local_field(state: NetworkState, patterns: PatternSet, i: int) -> float:
    """Formal derivative field n * sum_mu xi_i^mu (m^mu)^(n-1); diagnostic only."""
    _check_neuron(patterns, i)
    n, N = patterns.n, patterns.N
    m = np.array([int(v) for v in state.M], dtype=np.float64) / N
    return float(n * np.dot(patterns.columns[i].astype(np.float64), m ** (n - 1)))


def best_response(state: NetworkState, patterns: PatternSet, i: int) -> int:
    """sign(Phi_i), or the current spin when Phi_i == 0."""
    s = phi(state, patterns, i).sign
    return s if s != 0 else int(state.x[i])


def apply_flip(state: NetworkState, patterns: PatternSet, i: int) -> NetworkState:
    """Negate spin ``i`` and update every overlap in O(p)."""
    _check_neuron(patterns, i)
    delta = -2 * int(state.x[i])
    col = patterns.columns[i]
    if state.M.dtype == object:
        state.M = state.M + np.array([int(a) * delta for a in col], dtype=object)
    else:
        state.M += col.astype(np.int64) * delta
    state.x[i] = -state.x[i]
    return state


def is_fixed_point(state: NetworkState, patterns: PatternSet) -> bool:
    """True iff no neuron's best response strictly changes its spin."""
    fields = phi_all(state, patterns)
    return all(int(xi) * int(f) >= 0 for xi, f in zip(state.x, fields))
