import numpy as np
import pytest

from densemem.core import ModelParams, NetworkState, PatternSet
from densemem.ensembles import generate_random
from densemem.rng import Xoshiro256


@pytest.fixture
def rng():
    return Xoshiro256(1234)


@pytest.fixture
def force_bigint(monkeypatch):
    """Route every operation through the arbitrary-precision Python path."""
    monkeypatch.setattr(ModelParams, "fits_int64", property(lambda self: False))


def random_state(pats: PatternSet, rng: Xoshiro256) -> NetworkState:
    x = np.array([1 if rng.next_u64() >> 63 else -1 for _ in range(pats.N)], dtype=np.int8)
    return NetworkState.from_spins(x, pats)


def random_patterns(n: int, N: int, p: int, rng: Xoshiro256) -> PatternSet:
    return generate_random(ModelParams(n=n, N=N, p=p), rng)


def brute_numerator(x, patterns, n):
    """Sum_mu (xi^mu . x)^n with plain Python ints."""
    total = 0
    for row in patterns:
        total += sum(int(a) * int(b) for a, b in zip(row, x)) ** n
    return total


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(results):
        terminalreporter.write_line(results[num])
