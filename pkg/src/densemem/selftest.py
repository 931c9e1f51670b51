"""Brute-force and exact-identity oracles, runnable without pytest."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import ModelParams, NetworkState, PatternSet, apply_flip, is_fixed_point, phi, potential_numerator, rebuild_cache
from .dynamics import enumerate_fixed_points, run_to_fixed_point
from .ensembles import generate_random
from .rng import Xoshiro256


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


def _random_case(rng: Xoshiro256, max_N: int = 64, max_p: int = 32, orders=(2, 3, 4)):
    n = orders[rng.bounded(len(orders))]
    N = 1 + rng.bounded(max_N)
    p = 1 + rng.bounded(max_p)
    pats = generate_random(ModelParams(n=n, N=N, p=p), rng)
    x = np.where(np.array([rng.next_u64() >> 63 for _ in range(N)]) == 1, 1, -1)
    return pats, NetworkState.from_spins(x, pats)


def check_descent_identity(cases: int, rng: Xoshiro256) -> CheckResult:
    """A flip against the field raises the numerator by exactly 2|Phi|; phi ignores x_i."""
    for _ in range(cases):
        pats, st = _random_case(rng)
        i = rng.bounded(pats.N)
        f = phi(st, pats, i).numerator
        before = potential_numerator(st, pats.params)
        apply_flip(st, pats, i)
        after = potential_numerator(st, pats.params)
        if phi(st, pats, i).numerator != f:
            return CheckResult("descent identity", False, "phi changed after flipping its own neuron")
        # exact potential property: F(x') - F(x) = (x'_i - x_i) * phi, numerators
        if after - before != 2 * int(st.x[i]) * f:
            return CheckResult("descent identity", False, f"delta {after - before} != {2 * int(st.x[i]) * f}")
        if int(st.x[i]) * f > 0 and after - before != 2 * abs(f):
            return CheckResult("descent identity", False, "improving flip gain differs from 2|Phi|")
        M = st.M.copy()
        if not np.array_equal(rebuild_cache(st, pats).M, M):
            return CheckResult("descent identity", False, "cache diverged from recompute")
    return CheckResult("descent identity", True, f"{cases} cases")


def check_enumeration(cases: int, rng: Xoshiro256) -> CheckResult:
    """Async terminal states are among the enumerated fixed points (n=3, N<=12, p<=3)."""
    for _ in range(cases):
        N = 2 + rng.bounded(11)
        p = 1 + rng.bounded(3)
        pats = generate_random(ModelParams(n=3, N=N, p=p), rng)
        fixed = {tuple(int(v) for v in s) for s in enumerate_fixed_points(pats)}
        x = np.where(np.array([rng.next_u64() >> 63 for _ in range(N)]) == 1, 1, -1)
        st = NetworkState.from_spins(x, pats)
        run_to_fixed_point(pats, st, rng)
        if tuple(int(v) for v in st.x) not in fixed or not is_fixed_point(st, pats):
            return CheckResult("fixed-point enumeration", False, f"terminal state not fixed at N={N}, p={p}")
        if p == 1 and fixed != {tuple(int(v) for v in pats.patterns[0])}:
            return CheckResult("fixed-point enumeration", False, "p=1 fixed set is not {xi}")
    return CheckResult("fixed-point enumeration", True, f"{cases} instances")


def check_single_pattern(rng: Xoshiro256) -> CheckResult:
    pats = PatternSet.from_array([[1, -1, 1, 1]], n=3)
    fixed = enumerate_fixed_points(pats)
    ok = len(fixed) == 1 and np.array_equal(fixed[0], pats.patterns[0])
    return CheckResult("odd-order single pattern", ok, f"{len(fixed)} fixed point(s)")


def run_selftest(seed: int = 42, cases: int = 2000, report: Callable[[str], None] = print) -> bool:
    rng = Xoshiro256(seed)
    checks = [
        check_descent_identity(cases, rng),
        check_enumeration(max(1, cases // 20), rng),
        check_single_pattern(rng),
    ]
    for c in checks:
        report(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.detail}")
    ok = all(c.passed for c in checks)
    report(f"selftest {'passed' if ok else 'FAILED'} ({sum(c.passed for c in checks)}/{len(checks)})")
    return ok
