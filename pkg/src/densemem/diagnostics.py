"""Closed-form theory quantities and sampling estimates of the separation constants."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .adversary import corrupt_count
from .core import ModelParams, NetworkState, PatternSet
from .dynamics import async_sweep
from .rng import Xoshiro256

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TheoryQuantities:
    """Loading-derived constants; gamma/beta-dependent fields are None when not supplied.

    Exact fields are Fractions. ``contraction`` and ``alpha_rate`` are the
    same number under two names.
    """

    params: ModelParams
    loading: Fraction
    contraction: Fraction
    alpha_rate: Fraction
    rho_star_alpha: Fraction
    cap_lower: Fraction
    cap_upper: Fraction
    mimura_alpha3: Fraction
    gamma: float | None = None
    beta: float | None = None
    rho_star_gamma: float | None = None
    rho_star_beta: float | None = None

    @property
    def contracting(self) -> bool:
        return self.contraction > 0

    def as_dict(self) -> dict:
        out = {}
        for key in (
            "loading", "contraction", "alpha_rate", "rho_star_alpha",
            "cap_lower", "cap_upper", "mimura_alpha3",
            "gamma", "beta", "rho_star_gamma", "rho_star_beta",
        ):
            v = getattr(self, key)
            out[key] = None if v is None else float(v)
        return out


def theory(params: ModelParams, gamma: float | None = None, beta: float | None = None) -> TheoryQuantities:
    n, N, p = params.n, params.N, params.p
    scale = N ** (n - 1)
    loading = Fraction(p, scale)
    contraction = Fraction(1, n) - 2 * (n - 1) * loading
    rho_gamma = rho_beta = None
    if gamma is not None:
        rho_gamma = (gamma - n * (n - 1) * float(loading)) / 2
        if beta is not None:
            rho_beta = (gamma - (n - 1) * beta) / 2
    return TheoryQuantities(
        params=params,
        loading=loading,
        contraction=contraction,
        alpha_rate=contraction,
        rho_star_alpha=contraction / 2,
        cap_lower=Fraction(scale, 4 * n * n * (n - 1) ** 2),
        cap_upper=Fraction(2 * scale, n),
        mimura_alpha3=n * loading,
        gamma=gamma,
        beta=beta,
        rho_star_gamma=rho_gamma,
        rho_star_beta=rho_beta,
    )


def p_for_loading(alpha: float, N: int, n: int = 3) -> int:
    """Pattern count for loading alpha = p / N^(n-1), rounded to nearest."""
    return max(1, math.floor(alpha * N ** (n - 1) + 0.5))


def p_for_mimura(alpha3: float, N: int, n: int = 3) -> int:
    """Pattern count for Mimura loading alpha' = n p / N^(n-1).

    Converted to alpha = alpha'/n first, then truncated in floating point,
    so alpha'=0.15 at N=500 gives 12499.
    """
    return max(1, int(alpha3 / n * N ** (n - 1)))


def pairwise_overlaps_max(patterns: PatternSet, block: int = 1024) -> int:
    """max_{mu != nu} |<xi^mu, xi^nu>| computed exactly in blocks."""
    pats = patterns.patterns
    p, N = pats.shape
    # float32 sums of +/-1 stay exact while |partial sums| <= N < 2^24
    dtype = np.float32 if N < 2**24 else np.int64
    A = pats.astype(dtype)
    best = 0
    for start in range(0, p, block):
        stop = min(start + block, p)
        G = np.abs(A[start:stop] @ A.T)
        rows = np.arange(stop - start)
        G[rows, rows + start] = 0
        best = max(best, int(G.max()))
    return best


def beta_patterns(patterns: PatternSet) -> float:
    """Largest normalized overlap between two distinct stored patterns."""
    if patterns.p < 2:
        log.warning("beta_patterns with p < 2 is defined as 0")
        return 0.0
    return pairwise_overlaps_max(patterns) / patterns.N


@dataclass(frozen=True)
class SeparationEstimate:
    beta_patterns: float
    beta_state_hat: float
    lambda_hat: float
    gamma: float
    dominant: bool
    samples_used: int
    margin: float


def _interference(state: NetworkState, patterns: PatternSet, target: int):
    N, n = patterns.N, patterns.n
    m = np.asarray(state.M, dtype=np.float64) / N
    others = np.delete(np.arange(patterns.p), target)
    if others.size == 0:
        return 0.0, 0.0
    m_other = m[others]
    field = patterns.patterns[others].T.astype(np.float64) @ (m_other ** (n - 1))
    return float(np.abs(m_other).max()), float(np.abs(field).max())


def estimate_separation(
    patterns: PatternSet,
    target: int,
    gamma: float = 0.6,
    sample_count: int = 32,
    rng: Xoshiro256 | None = None,
    trajectory_sweeps: int = 3,
) -> SeparationEstimate:
    """Monte-Carlo estimates of the state-overlap bound and the componentwise interference.

    Samples states on the basin boundary (floor(N(1-gamma)/2) flips of the
    target) and the states visited by short async retrieval runs from them
    that stay inside the basin. Values are estimates, not certificates.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    if not 0 < gamma < 1:
        raise ValueError("gamma must lie in (0, 1)")
    rng = rng or Xoshiro256(42)
    N, n = patterns.N, patterns.n
    k = math.floor(N * (1 - gamma) / 2)
    beta_hat = lam_hat = 0.0
    used = 0
    for _ in range(sample_count):
        state = corrupt_count(patterns, target, k, rng)
        b, lam = _interference(state, patterns, target)
        beta_hat, lam_hat = max(beta_hat, b), max(lam_hat, lam)
        used += 1
        for _ in range(trajectory_sweeps):
            flips = async_sweep(state, patterns, rng)
            if int(state.M[target]) / N < gamma:
                break
            b, lam = _interference(state, patterns, target)
            beta_hat, lam_hat = max(beta_hat, b), max(lam_hat, lam)
            used += 1
            if flips == 0:
                break
    signal = gamma ** (n - 1)
    return SeparationEstimate(
        beta_patterns=beta_patterns(patterns) if patterns.p >= 2 else 0.0,
        beta_state_hat=beta_hat,
        lambda_hat=lam_hat,
        gamma=gamma,
        dominant=lam_hat < signal,
        samples_used=used,
        margin=n / 2 * (signal - lam_hat),
    )


@dataclass(frozen=True)
class ContractionProbe:
    mean_gain: float
    predicted_gain: float
    ratio: float | None
    start_overlap: float
    trials: int


def contraction_probe(
    patterns: PatternSet, target: int, gamma: float, trials: int, rng: Xoshiro256
) -> ContractionProbe:
    """Mean overlap gain per single update over one async sweep from overlap gamma.

    Compared against (alpha/N)(1 - m); logged for inspection, not a pass/fail check.
    """
    N = patterns.N
    k = math.floor(N * (1 - gamma) / 2)
    gains = []
    start = 1 - 2 * k / N
    for _ in range(trials):
        state = corrupt_count(patterns, target, k, rng)
        m0 = int(state.M[target]) / N
        async_sweep(state, patterns, rng)
        gains.append((int(state.M[target]) / N - m0) / N)
    mean_gain = float(np.mean(gains)) if gains else 0.0
    alpha = float(theory(patterns.params).contraction)
    predicted = alpha / N * (1 - start)
    ratio = mean_gain / predicted if predicted != 0 else None
    log.info(
        "contraction probe N=%d p=%d gamma=%.3f: gain/update=%.3e predicted=%.3e ratio=%s",
        N, patterns.p, gamma, mean_gain, predicted, ratio,
    )
    return ContractionProbe(mean_gain, predicted, ratio, start, trials)
