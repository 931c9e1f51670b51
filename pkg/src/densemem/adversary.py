"""Initial corruption and per-round adversaries.

Adversaries only ever flip neurons that currently agree with the target.
The strong model ranks those neurons by ``Phi_i * xi_i`` (once per round,
against the pre-attack state) and flips the least aligned; the weak model
samples uniformly among correct neurons whose field already opposes the
target, topping up from the remaining correct neurons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _kernels as K
from .core import NetworkState, PatternSet, apply_flip, phi_all
from .dynamics import SweepConfig, TrialOutcome, async_sweep
from .rng import Xoshiro256, partial_shuffle


class AdversaryModel(str, Enum):
    STRONG = "strong"
    WEAK = "weak"
    NONE = "none"


def round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


@dataclass(frozen=True)
class AdversaryConfig:
    model: AdversaryModel = AdversaryModel.STRONG
    rho: float = 0.0
    rounds: int = 10
    gamma0: float = 0.6

    def __post_init__(self):
        object.__setattr__(self, "model", AdversaryModel(self.model))
        if not 0 <= self.rho <= 1:
            raise ValueError("rho must lie in [0, 1]")
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if not -1 <= self.gamma0 <= 1:
            raise ValueError("gamma0 must lie in [-1, 1]")

    def budget(self, N: int) -> int:
        return round_half_up(self.rho * N)


def corrupt_random(patterns: PatternSet, target: int, fraction: float, rng: Xoshiro256) -> NetworkState:
    """Copy of pattern ``target`` with round(fraction*N) distinct spins flipped."""
    if not 0 <= fraction <= 1:
        raise ValueError("corruption fraction must lie in [0, 1]")
    return corrupt_count(patterns, target, round_half_up(fraction * patterns.N), rng)


def corrupt_count(patterns: PatternSet, target: int, k: int, rng: Xoshiro256) -> NetworkState:
    N = patterns.N
    k = min(max(k, 0), N)
    x = patterns.patterns[target].copy()
    idx = np.arange(N, dtype=np.int64)
    partial_shuffle(rng.state, idx, k)
    x[idx[:k]] *= -1
    return NetworkState.from_spins(x, patterns)


def _alignments(state: NetworkState, patterns: PatternSet, target: int):
    xi = patterns.patterns[target]
    correct = np.flatnonzero(state.x == xi)
    fields = phi_all(state, patterns)
    return correct, [int(fields[i]) * int(xi[i]) for i in correct]


def adversary_strong(state: NetworkState, patterns: PatternSet, target: int, k: int) -> int:
    """Flip the ``k`` least aligned correct neurons; returns the number flipped."""
    if k <= 0:
        return 0
    if patterns.params.fits_int64:
        coef = np.array(patterns.params.field_coefficients, dtype=np.int64)
        return int(K.strong_attack(patterns.patterns, patterns.columns, state.M, state.x, coef, target, k))
    correct, align = _alignments(state, patterns, target)
    order = sorted(range(len(correct)), key=lambda t: (align[t], correct[t]))
    chosen = [int(correct[t]) for t in order[:k]]
    for i in chosen:
        apply_flip(state, patterns, i)
    return len(chosen)


def adversary_weak(
    state: NetworkState, patterns: PatternSet, target: int, k: int, rng: Xoshiro256
) -> int:
    """Flip up to ``k`` random correct neurons, opposing-field ones first."""
    if k <= 0:
        return 0
    if patterns.params.fits_int64:
        coef = np.array(patterns.params.field_coefficients, dtype=np.int64)
        return int(
            K.weak_attack(patterns.patterns, patterns.columns, state.M, state.x, coef, target, k, rng.state)
        )
    correct, align = _alignments(state, patterns, target)
    cand = np.array([i for i, a in zip(correct, align) if a < 0], dtype=np.int64)
    rest = np.array([i for i, a in zip(correct, align) if a >= 0], dtype=np.int64)
    take = min(k, cand.size)
    partial_shuffle(rng.state, cand, take)
    extra = min(k - take, rest.size)
    if extra > 0:
        partial_shuffle(rng.state, rest, extra)
    for i in list(cand[:take]) + list(rest[:extra]):
        apply_flip(state, patterns, int(i))
    return take + extra


def attack(
    model: AdversaryModel, state: NetworkState, patterns: PatternSet, target: int, k: int, rng: Xoshiro256
) -> int:
    if model is AdversaryModel.STRONG:
        return adversary_strong(state, patterns, target, k)
    if model is AdversaryModel.WEAK:
        return adversary_weak(state, patterns, target, k, rng)
    return 0


def robustness_protocol(
    patterns: PatternSet,
    target: int,
    adv: AdversaryConfig,
    sweep_cfg: SweepConfig,
    rng: Xoshiro256,
) -> TrialOutcome:
    """Start at overlap ``gamma0``; each round the adversary corrupts, then one async sweep.

    Success means the target matching fraction is at least ``omega`` after
    the final round.
    """
    N = patterns.N
    state = corrupt_count(patterns, target, round_half_up(N * (1 - adv.gamma0) / 2), rng)
    budget = adv.budget(N)
    flips = 0
    for _ in range(adv.rounds):
        attack(adv.model, state, patterns, target, budget, rng)
        flips += async_sweep(state, patterns, rng)
    matches = ((N + int(state.M[target])) // 2) / N
    return TrialOutcome(
        converged=matches >= sweep_cfg.omega,
        sweeps_used=adv.rounds,
        final_overlap=int(state.M[target]) / N,
        flips_total=flips,
    )
