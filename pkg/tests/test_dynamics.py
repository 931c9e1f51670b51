import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from densemem.adversary import corrupt_random
from densemem.core import ModelParams, NetworkState, PatternSet, is_fixed_point, potential_numerator
from densemem.dynamics import (
    SweepConfig,
    UpdateMode,
    async_sweep,
    enumerate_fixed_points,
    retrieve,
    run_to_fixed_point,
    sync_sweep,
)
from densemem.ensembles import generate_random
from densemem.rng import Xoshiro256

from conftest import random_patterns, random_state

ALL_PLUS = PatternSet.from_array([[1, 1, 1]])

# found by random search over N <= 8: parallel updates oscillate between x and its image
CYCLE_PATTERNS = [[-1, -1, -1, -1, -1, -1, 1, 1], [1, 1, 1, 1, 1, 1, 1, 1]]
CYCLE_START = [1, -1, 1, 1, -1, -1, 1, 1]


def test_config_validation():
    with pytest.raises(ValueError):
        SweepConfig(omega=0)
    with pytest.raises(ValueError):
        SweepConfig(max_sweeps=0)
    assert SweepConfig(mode="sync").mode is UpdateMode.SYNC


def test_async_fixed_point_zero_flips():
    pats = PatternSet.from_array([[1, -1, 1, 1, -1]])
    st_ = NetworkState.from_spins(pats.patterns[0].copy(), pats)
    assert async_sweep(st_, pats, Xoshiro256(1)) == 0


@pytest.mark.parametrize("seed", range(6))
def test_async_single_error_corrected(seed):
    st_ = NetworkState.from_spins(np.array([1, 1, -1], dtype=np.int8), ALL_PLUS)
    assert async_sweep(st_, ALL_PLUS, Xoshiro256(seed)) == 1
    assert st_.x.tolist() == [1, 1, 1]


def test_sync_examples():
    st_ = NetworkState.from_spins(np.array([1, 1, -1], dtype=np.int8), ALL_PLUS)
    assert sync_sweep(st_, ALL_PLUS) == 1
    assert st_.x.tolist() == [1, 1, 1]
    assert sync_sweep(st_, ALL_PLUS) == 0


def test_sync_two_cycle_terminates_at_max_sweeps():
    pats = PatternSet.from_array(CYCLE_PATTERNS, n=3)
    start = np.array(CYCLE_START, dtype=np.int8)
    st_ = NetworkState.from_spins(start.copy(), pats)
    sync_sweep(st_, pats)
    assert not np.array_equal(st_.x, start)
    sync_sweep(st_, pats)
    assert np.array_equal(st_.x, start)
    out = retrieve(pats, NetworkState.from_spins(start.copy(), pats), SweepConfig(target=0, mode="sync", max_sweeps=25))
    assert not out.converged
    assert out.sweeps_used == 25


def test_async_potential_monotone_within_sweep(rng):
    pats = random_patterns(3, 60, 30, rng)
    st_ = random_state(pats, rng)
    cfg = SweepConfig(target=0, max_sweeps=20, record_potential=True)
    out = retrieve(pats, st_, cfg, rng)
    trace = out.potential_trace
    assert all(b >= a for a, b in zip(trace, trace[1:]))
    assert out.final_potential == trace[-1]


def test_async_visits_every_neuron_once(rng, monkeypatch):
    # the Python path lets us observe the visiting order
    import densemem.dynamics as D

    monkeypatch.setattr(ModelParams, "fits_int64", property(lambda self: False))
    pats = random_patterns(3, 25, 4, rng)
    st_ = random_state(pats, rng)
    seen = []
    real_phi = D.phi

    def spy(state, patterns, i):
        seen.append(i)
        return real_phi(state, patterns, i)

    monkeypatch.setattr(D, "phi", spy)
    async_sweep(st_, pats, rng)
    assert sorted(seen) == list(range(25))


def test_retrieve_from_pattern_reports_zero_sweeps(rng):
    pats = random_patterns(3, 50, 5, rng)
    st_ = NetworkState.from_spins(pats.patterns[2].copy(), pats)
    out = retrieve(pats, st_, SweepConfig(target=2), rng)
    assert out.converged and out.sweeps_used == 0 and out.final_overlap == 1.0


def test_retrieve_requires_rng_for_async(rng):
    pats = random_patterns(3, 10, 2, rng)
    with pytest.raises(ValueError):
        retrieve(pats, random_state(pats, rng), SweepConfig())
    with pytest.raises(IndexError):
        retrieve(pats, random_state(pats, rng), SweepConfig(target=2), rng)


def test_retrieve_outcome_invariants(rng):
    for _ in range(20):
        pats = random_patterns(3, 80, 60, rng)
        st_ = corrupt_random(pats, 0, 0.3, rng)
        cfg = SweepConfig(target=0, max_sweeps=5)
        out = retrieve(pats, st_, cfg, rng)
        assert out.sweeps_used <= 5
        if out.converged:
            assert (1 + out.final_overlap) / 2 >= cfg.omega


def test_retrieve_low_load_converges_in_one_sweep(rng):
    params = ModelParams(3, 200, 1200)  # alpha = 0.03
    hits = []
    for t in range(10):
        pats = generate_random(params, rng)
        out = retrieve(pats, corrupt_random(pats, t, 0.15, rng), SweepConfig(target=t), rng)
        hits.append(out.converged and out.sweeps_used <= 2)
    assert all(hits)


def test_enumeration_examples():
    xi = np.array([1, -1, 1, 1])
    fixed3 = enumerate_fixed_points(PatternSet.from_array([xi], n=3))
    assert [f.tolist() for f in fixed3] == [xi.tolist()]
    fixed2 = enumerate_fixed_points(PatternSet.from_array([xi], n=2))
    assert sorted(f.tolist() for f in fixed2) == sorted([xi.tolist(), (-xi).tolist()])
    with pytest.raises(ValueError):
        enumerate_fixed_points(PatternSet.from_array(np.ones((1, 17))))


def test_enumeration_agrees_with_direct_check(rng):
    pats = random_patterns(3, 8, 3, rng)
    fixed = {tuple(f) for f in enumerate_fixed_points(pats)}
    for code in range(256):
        x = np.array([1 if code >> b & 1 else -1 for b in range(8)], dtype=np.int8)
        assert (tuple(x) in fixed) == is_fixed_point(NetworkState.from_spins(x, pats), pats)


def test_enumeration_bigint_path(force_bigint, rng):
    pats = random_patterns(3, 6, 2, rng)
    fixed = {tuple(f) for f in enumerate_fixed_points(pats)}
    for code in range(64):
        x = np.array([1 if code >> b & 1 else -1 for b in range(6)], dtype=np.int8)
        assert (tuple(x) in fixed) == is_fixed_point(NetworkState.from_spins(x, pats), pats)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 12), st.integers(1, 3), st.integers(0, 2**32))
def test_terminal_states_are_enumerated(N, p, seed):
    rng = Xoshiro256(seed)
    pats = random_patterns(3, N, p, rng)
    fixed = {tuple(f) for f in enumerate_fixed_points(pats)}
    st_ = random_state(pats, rng)
    run_to_fixed_point(pats, st_, rng)
    assert tuple(st_.x) in fixed


def test_async_reaches_zero_flip_sweep_at_desk_scale(rng):
    for _ in range(30):
        N = 1 + rng.bounded(64)
        pats = random_patterns([2, 3, 4][rng.bounded(3)], N, 1 + rng.bounded(32), rng)
        st_ = random_state(pats, rng)
        run_to_fixed_point(pats, st_, rng, max_sweeps=1000)
        assert is_fixed_point(st_, pats)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_kernel_and_python_paths_agree(n, monkeypatch):
    base = Xoshiro256(77)
    pats = random_patterns(n, 40, 25, base)
    x0 = random_state(pats, base).x.copy()

    def run(mode):
        st_ = NetworkState.from_spins(x0.copy(), pats)
        r = Xoshiro256(5)
        flips = [async_sweep(st_, pats, r) if mode == "async" else sync_sweep(st_, pats) for _ in range(4)]
        return flips, st_.x.tolist(), [int(m) for m in st_.M], int(r.next_u64())

    fast = {m: run(m) for m in ("async", "sync")}
    monkeypatch.setattr(ModelParams, "fits_int64", property(lambda self: False))
    slow = {m: run(m) for m in ("async", "sync")}
    assert fast == slow


def test_retrieve_can_run_past_success_to_stall(rng):
    for _ in range(40):
        N = 2 + rng.bounded(11)
        pats = random_patterns(3, N, 1 + rng.bounded(3), rng)
        fixed = {tuple(f) for f in enumerate_fixed_points(pats)}
        st_ = random_state(pats, rng)
        out = retrieve(pats, st_, SweepConfig(target=0, max_sweeps=10_000, stop_on_converge=False), rng)
        assert tuple(st_.x) in fixed
        assert out.sweeps_used <= 10_000
