"""Sweep schedulers, the retrieval loop and brute-force fixed-point oracles."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _kernels as K
from .core import (
    NetworkState,
    PatternSet,
    apply_flip,
    phi,
    potential_numerator,
    rebuild_cache,
)
from .rng import Xoshiro256, shuffle_inplace

MAX_ENUMERATION_N = 16


class UpdateMode(str, Enum):
    ASYNC = "async"
    SYNC = "sync"


@dataclass(frozen=True)
class SweepConfig:
    target: int = 0
    mode: UpdateMode = UpdateMode.ASYNC
    max_sweeps: int = 60
    omega: float = 0.95
    stop_on_stall: bool = True
    stop_on_converge: bool = True
    record_potential: bool = False

    def __post_init__(self):
        if not 0 < self.omega <= 1:
            raise ValueError("omega must lie in (0, 1]")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be >= 1")
        object.__setattr__(self, "mode", UpdateMode(self.mode))


@dataclass
class TrialOutcome:
    converged: bool
    sweeps_used: int
    final_overlap: float
    flips_total: int
    potential_trace: list[int] | None = None
    final_potential: int | None = None


def _coef(patterns: PatternSet) -> np.ndarray:
    return np.array(patterns.params.field_coefficients, dtype=np.int64)


def async_sweep(state: NetworkState, patterns: PatternSet, rng: Xoshiro256) -> int:
    """Visit every neuron once in a fresh random order, applying best responses."""
    if patterns.params.fits_int64:
        perm = np.empty(patterns.N, dtype=np.int64)
        return int(K.async_sweep(patterns.columns, state.M, state.x, _coef(patterns), rng.state, perm))
    perm = np.arange(patterns.N, dtype=np.int64)
    shuffle_inplace(rng.state, perm)
    flips = 0
    for i in perm:
        s = phi(state, patterns, int(i)).sign
        if s != 0 and s != state.x[i]:
            apply_flip(state, patterns, int(i))
            flips += 1
    return flips


def sync_sweep(state: NetworkState, patterns: PatternSet) -> int:
    """Parallel update: all fields from the frozen state, then one cache rebuild."""
    if patterns.params.fits_int64:
        return int(K.sync_sweep(patterns.patterns, patterns.columns, state.M, state.x, _coef(patterns)))
    new = state.x.copy()
    for i in range(patterns.N):
        s = phi(state, patterns, i).sign
        if s != 0:
            new[i] = s
    flips = int(np.count_nonzero(new != state.x))
    if flips:
        state.x[:] = new
        rebuild_cache(state, patterns)
    return flips


def _matches(state: NetworkState, patterns: PatternSet, target: int) -> float:
    return ((patterns.N + int(state.M[target])) // 2) / patterns.N


def retrieve(
    patterns: PatternSet,
    initial_state: NetworkState,
    config: SweepConfig,
    rng: Xoshiro256 | None = None,
) -> TrialOutcome:
    """Run sweeps until the target matching fraction reaches ``omega``.

    The check happens after each completed sweep (an initial state already
    above threshold reports zero sweeps). With ``stop_on_stall`` a sweep that
    flips nothing ends the run early: the state is then a fixed point and
    cannot move again. With ``stop_on_converge=False`` the run continues past
    the first success until it stalls (or hits ``max_sweeps``); ``sweeps_used``
    still counts sweeps up to the first success, and ``converged`` reflects
    the final state.
    """
    if not 0 <= config.target < patterns.p:
        raise IndexError(f"target {config.target} out of range")
    if config.mode is UpdateMode.ASYNC and rng is None:
        raise ValueError("asynchronous retrieval needs a random stream")
    state = initial_state
    params = patterns.params
    trace = [potential_numerator(state, params)] if config.record_potential else None
    flips_total = 0
    sweeps = 0
    converged = _matches(state, patterns, config.target) >= config.omega
    first_success = 0 if converged else None
    while sweeps < config.max_sweeps and not (converged and config.stop_on_converge):
        if config.mode is UpdateMode.ASYNC:
            flips = async_sweep(state, patterns, rng)
        else:
            flips = sync_sweep(state, patterns)
        sweeps += 1
        flips_total += flips
        if trace is not None:
            trace.append(potential_numerator(state, params))
        converged = _matches(state, patterns, config.target) >= config.omega
        if converged and first_success is None:
            first_success = sweeps
        if flips == 0 and config.stop_on_stall:
            break
    if converged and first_success is not None:
        sweeps = first_success
    return TrialOutcome(
        converged=converged,
        sweeps_used=sweeps,
        final_overlap=int(state.M[config.target]) / patterns.N,
        flips_total=flips_total,
        potential_trace=trace,
        final_potential=trace[-1] if trace is not None else None,
    )


def run_to_fixed_point(
    patterns: PatternSet, state: NetworkState, rng: Xoshiro256, max_sweeps: int = 10_000
) -> int:
    """Async sweeps until one flips nothing; returns the sweep count."""
    for sweep in range(1, max_sweeps + 1):
        if async_sweep(state, patterns, rng) == 0:
            return sweep
    raise RuntimeError(f"no zero-flip sweep within {max_sweeps} sweeps")


def enumerate_fixed_points(patterns: PatternSet) -> list[np.ndarray]:
    """Every state on {-1,+1}^N where no best response changes a spin."""
    N = patterns.N
    if N > MAX_ENUMERATION_N:
        raise ValueError(f"enumeration limited to N <= {MAX_ENUMERATION_N}")
    pats = patterns.patterns.astype(np.int64)
    coef = patterns.params.field_coefficients
    cols = pats.T
    # all 2^N states at once: rows of X
    X = np.array(list(itertools.product((-1, 1), repeat=N)), dtype=np.int64)
    M = X @ pats.T
    fixed = np.ones(X.shape[0], dtype=bool)
    exact = patterns.params.fits_int64
    for i in range(N):
        S = M - X[:, i : i + 1] * cols[i][None, :]
        if not exact:
            S = S.astype(object)
        poly = coef[-1]
        for c in reversed(coef[:-1]):
            poly = poly * S + c
        aligned = X[:, i] * (poly * cols[i][None, :]).sum(axis=1)
        fixed &= aligned >= 0 if exact else np.array([int(v) >= 0 for v in aligned], dtype=bool)
    return [X[k].astype(np.int8) for k in np.flatnonzero(fixed)]
