import logging
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from densemem.core import ModelParams, PatternSet
from densemem.diagnostics import (
    beta_patterns,
    contraction_probe,
    estimate_separation,
    p_for_loading,
    p_for_mimura,
    pairwise_overlaps_max,
    theory,
)
from densemem.ensembles import generate_random
from densemem.rng import Xoshiro256


def test_theory_reference_values():
    tq = theory(ModelParams(3, 500, 1250), gamma=0.6, beta=0.224)
    assert tq.loading == Fraction(1, 200)
    assert tq.rho_star_gamma == pytest.approx(0.285)
    assert tq.rho_star_beta == pytest.approx(0.076)
    assert tq.mimura_alpha3 == Fraction(3, 200)
    assert tq.alpha_rate == tq.contraction == Fraction(1, 3) - 4 * Fraction(1, 200)


def test_theory_capacity_constants():
    tq = theory(ModelParams(3, 100, 10))
    assert float(tq.cap_lower) == pytest.approx(10000 / 144)
    assert float(tq.cap_upper) == pytest.approx(6666.67, abs=0.01)
    assert tq.rho_star_gamma is None and tq.rho_star_beta is None
    assert theory(ModelParams(3, 100, 10), beta=0.3).rho_star_beta is None


def test_loading_conversions():
    assert p_for_mimura(0.10, 500) == 8333
    assert p_for_mimura(0.15, 500) == 12499
    assert p_for_mimura(0.30, 500) == 24999
    assert p_for_loading(0.005, 500) == 1250
    assert p_for_loading(0.03, 200) == 1200
    assert p_for_loading(1e-9, 10) == 1


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 6), st.integers(2, 60), st.integers(1, 200))
def test_contraction_sign_and_rho_identity(n, N, p):
    try:
        params = ModelParams(n, N, p)
    except OverflowError:
        return
    tq = theory(params)
    assert tq.rho_star_alpha == tq.contraction / 2
    assert tq.contracting == (Fraction(p) < Fraction(N ** (n - 1), 2 * n * (n - 1)))
    if p > 1:
        assert theory(ModelParams(n, N, p - 1)).contraction > tq.contraction


def test_rho_star_beta_decreasing_in_beta():
    params = ModelParams(3, 500, 1250)
    vals = [theory(params, 0.6, b).rho_star_beta for b in (0.1, 0.2, 0.3)]
    assert vals[0] > vals[1] > vals[2]


def test_as_dict_floats():
    d = theory(ModelParams(3, 100, 100), gamma=0.6).as_dict()
    assert d["loading"] == 0.01 and d["beta"] is None and isinstance(d["contraction"], float)


def test_beta_examples(caplog):
    xi = np.array([1, -1, 1, -1, 1, 1])
    assert beta_patterns(PatternSet.from_array([xi, xi])) == 1.0
    assert beta_patterns(PatternSet.from_array([xi, [1, -1, 1, 1, -1, -1]])) == 0.0
    with caplog.at_level(logging.WARNING):
        assert beta_patterns(PatternSet.from_array([xi])) == 0.0
    assert "p < 2" in caplog.text


def test_beta_blocked_matches_brute_force(rng):
    pats = generate_random(ModelParams(3, 37, 70), rng)
    P = pats.patterns.astype(int)
    G = np.abs(P @ P.T)
    np.fill_diagonal(G, 0)
    assert pairwise_overlaps_max(pats, block=16) == G.max() == pairwise_overlaps_max(pats)


def test_beta_invariances(rng):
    pats = generate_random(ModelParams(3, 50, 12), rng)
    b = beta_patterns(pats)
    perm = pats.patterns[::-1]
    assert beta_patterns(PatternSet(pats.params, perm)) == b
    neg = pats.patterns.copy()
    neg[4] *= -1
    assert beta_patterns(PatternSet(pats.params, neg)) == b


def test_separation_single_pattern(rng):
    pats = PatternSet.from_array([np.ones(40)])
    est = estimate_separation(pats, 0, 0.6, 8, rng)
    assert est.beta_state_hat == 0 and est.lambda_hat == 0 and est.dominant
    assert est.samples_used >= 8


def test_separation_mirrored_patterns_not_dominant(rng):
    xi = np.array([1 if Xoshiro256(k).next_u64() >> 63 else -1 for k in range(50)])
    est = estimate_separation(PatternSet.from_array([xi, -xi]), 0, 0.6, 10, rng)
    assert not est.dominant
    assert est.lambda_hat >= 0.6**2


def test_separation_naive_bound_and_ranges(rng):
    for _ in range(5):
        pats = generate_random(ModelParams(3, 80, 40), rng)
        est = estimate_separation(pats, 3, 0.6, 6, rng)
        assert 0 <= est.beta_state_hat <= 1 and 0 <= est.beta_patterns <= 1
        assert est.lambda_hat <= (pats.p - 1) * est.beta_state_hat**2 + 1e-12
    with pytest.raises(ValueError):
        estimate_separation(pats, 0, 0.6, 0, rng)


def test_separation_random_dense_regime_regression():
    # Per-neuron interference has std ~ sqrt(3p)/N ~ 0.17 here, so its maximum
    # over 500 neurons sits near 0.7, above gamma^2 = 0.36: the componentwise
    # supremum is not dominated even though a typical neuron is.
    pats = generate_random(ModelParams(3, 500, 2500), Xoshiro256(42))
    est = estimate_separation(pats, 0, 0.6, 16, Xoshiro256(42))
    assert est.lambda_hat == pytest.approx(0.6926, abs=1e-3)
    assert not est.dominant
    assert est.beta_state_hat < 0.6**2


def test_contraction_probe_cases(rng, caplog):
    pats = PatternSet.from_array([np.ones(100)])
    assert contraction_probe(pats, 0, 0.999, 5, rng).mean_gain == 0
    pats = generate_random(ModelParams(3, 200, 400), rng)
    with caplog.at_level(logging.INFO, logger="densemem"):
        probe = contraction_probe(pats, 0, 0.4, 10, rng)
    assert probe.mean_gain > 0
    assert "contraction probe" in caplog.text
    over = generate_random(ModelParams(3, 40, 2000), rng)
    contraction_probe(over, 0, 0.6, 5, rng)  # logged only
