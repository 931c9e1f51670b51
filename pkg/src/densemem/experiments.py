"""Grid runners for the convergence, basin, robustness, capacity and comparison studies.

Every trial is a pure function of (grid point, trial index, master seed):
its random stream is seeded with ``derive_seed(master, kind, seed_index,
trial)``. ``seed_index`` ignores the axis being compared (update mode,
adversary model, pattern ensemble), so compared arms see the same draws.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .adversary import AdversaryConfig, AdversaryModel, corrupt_count, corrupt_random, robustness_protocol, round_half_up
from .core import ModelParams, PatternSet
from .diagnostics import TheoryQuantities, beta_patterns, p_for_loading, p_for_mimura, theory
from .dynamics import SweepConfig, TrialOutcome, UpdateMode, retrieve
from .ensembles import EnsembleKind, generate_correlated, generate_random, load_patterns
from .rng import Xoshiro256, derive_seed
from .stats import PowerLawFit, bootstrap_ci, fit_power_law

log = logging.getLogger(__name__)


class ExperimentKind(str, Enum):
    CONVERGENCE = "convergence"
    BASIN = "basin"
    ADVERSARIAL = "adversarial"
    CAPACITY = "capacity"
    UPDATE_COMPARE = "update_compare"
    PATTERN_COMPARE = "pattern_compare"
    REALDATA = "realdata"


@dataclass(frozen=True)
class TrialSettings:
    n: int = 3
    omega: float = 0.95
    max_sweeps: int = 60
    gamma: float = 0.6
    rounds: int = 10


@dataclass(frozen=True)
class ExperimentGrid:
    """Axes of one study. Unused axes for a kind are ignored.

    ``loadings`` holds alpha = p/N^(n-1), except for ``update_compare``
    where it holds Mimura's alpha'. ``ps`` overrides loadings with explicit
    pattern counts. ``corruptions`` are flip fractions, except for
    ``update_compare`` where they are initial overlaps m0.
    """

    kind: ExperimentKind
    Ns: tuple[int, ...] = ()
    loadings: tuple[float, ...] = ()
    ps: tuple[int, ...] = ()
    corruptions: tuple[float, ...] = ()
    rhos: tuple[float, ...] = ()
    adversaries: tuple[AdversaryModel, ...] = (AdversaryModel.STRONG, AdversaryModel.WEAK)
    pattern_kinds: tuple[EnsembleKind, ...] = (EnsembleKind.RANDOM, EnsembleKind.CORRELATED)
    modes: tuple[UpdateMode, ...] = (UpdateMode.ASYNC, UpdateMode.SYNC)
    sources: tuple[str, ...] = ()
    trials: int = 60
    master_seed: int = 42
    n: int = 3
    omega: float = 0.95
    max_sweeps: int = 60
    gamma: float = 0.6
    rounds: int = 10
    resamples: int = 2000
    measure_beta: bool = True

    def __post_init__(self):
        object.__setattr__(self, "kind", ExperimentKind(self.kind))
        object.__setattr__(self, "adversaries", tuple(AdversaryModel(a) for a in self.adversaries))
        object.__setattr__(self, "pattern_kinds", tuple(EnsembleKind(k) for k in self.pattern_kinds))
        object.__setattr__(self, "modes", tuple(UpdateMode(m) for m in self.modes))
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        required = {
            ExperimentKind.CONVERGENCE: ("Ns", "corruptions"),
            ExperimentKind.BASIN: ("Ns", "corruptions"),
            ExperimentKind.ADVERSARIAL: ("Ns", "rhos", "adversaries"),
            ExperimentKind.CAPACITY: ("Ns",),
            ExperimentKind.UPDATE_COMPARE: ("Ns", "loadings", "corruptions", "modes"),
            ExperimentKind.PATTERN_COMPARE: ("Ns", "corruptions", "pattern_kinds"),
            ExperimentKind.REALDATA: ("sources", "corruptions"),
        }[self.kind]
        for axis in required:
            if not getattr(self, axis):
                raise ValueError(f"{self.kind.value} grid needs a non-empty {axis} axis")
        if self.kind in (ExperimentKind.CONVERGENCE, ExperimentKind.BASIN, ExperimentKind.ADVERSARIAL,
                         ExperimentKind.PATTERN_COMPARE) and not (self.loadings or self.ps):
            raise ValueError(f"{self.kind.value} grid needs loadings or ps")

    @property
    def settings(self) -> TrialSettings:
        return TrialSettings(self.n, self.omega, self.max_sweeps, self.gamma, self.rounds)

    def pattern_counts(self, N: int) -> list[tuple[float | None, int]]:
        if self.ps:
            return [(p / N ** (self.n - 1), p) for p in self.ps]
        if self.kind is ExperimentKind.UPDATE_COMPARE:
            return [(a, p_for_mimura(a, N, self.n)) for a in self.loadings]
        return [(a, p_for_loading(a, N, self.n)) for a in self.loadings]


@dataclass(frozen=True)
class GridPoint:
    kind: ExperimentKind
    N: int
    p: int
    loading: float | None = None
    corruption: float | None = None
    m0: float | None = None
    rho: float | None = None
    adversary: AdversaryModel | None = None
    pattern_kind: EnsembleKind = EnsembleKind.RANDOM
    mode: UpdateMode = UpdateMode.ASYNC
    source: str | None = None
    seed_index: int = 0


@dataclass
class ExperimentRecord:
    point: GridPoint
    trials: int
    successes: int
    success_rate: float
    mean_sweeps: float | None
    ci: tuple[float, float] | None
    beta_measured: float | None
    theory: TheoryQuantities | None
    error: str | None = None


def expand_grid(grid: ExperimentGrid) -> list[GridPoint]:
    """Grid points in deterministic order, with comparison-blind seed indices."""
    raw: list[tuple[tuple, GridPoint]] = []
    k = grid.kind
    if k in (ExperimentKind.CONVERGENCE, ExperimentKind.BASIN):
        for N in grid.Ns:
            for loading, p in grid.pattern_counts(N):
                for c in grid.corruptions:
                    raw.append(((N, p, c), GridPoint(k, N, p, loading=loading, corruption=c)))
        # loading-major order keeps each loading curve contiguous
        raw.sort(key=lambda item: (item[1].loading, item[1].N, item[1].corruption))
    elif k is ExperimentKind.ADVERSARIAL:
        for N in grid.Ns:
            for loading, p in grid.pattern_counts(N):
                for adv in grid.adversaries:
                    for rho in grid.rhos:
                        raw.append(((N, p, rho), GridPoint(k, N, p, loading=loading, rho=rho, adversary=adv)))
    elif k is ExperimentKind.UPDATE_COMPARE:
        for N in grid.Ns:
            for loading, p in grid.pattern_counts(N):
                for m0 in grid.corruptions:
                    for mode in grid.modes:
                        raw.append(((N, p, m0), GridPoint(k, N, p, loading=loading, m0=m0, mode=mode)))
    elif k is ExperimentKind.PATTERN_COMPARE:
        for N in grid.Ns:
            for loading, p in grid.pattern_counts(N):
                for c in grid.corruptions:
                    for pk in grid.pattern_kinds:
                        raw.append(((N, p, c), GridPoint(k, N, p, loading=loading, corruption=c, pattern_kind=pk)))
    elif k is ExperimentKind.REALDATA:
        for src in grid.sources:
            pats = load_patterns(src, grid.n)
            for c in grid.corruptions:
                raw.append(((src, c), GridPoint(k, pats.N, pats.p, corruption=c, pattern_kind=EnsembleKind.FILE, source=src)))
    else:
        raise ValueError(f"{k.value} is not a trial grid; use run_capacity")
    index: dict[tuple, int] = {}
    points = []
    for key, pt in raw:
        points.append(replace(pt, seed_index=index.setdefault(key, len(index))))
    return points


_file_cache: dict[tuple[str, int], PatternSet] = {}


def _patterns_for(point: GridPoint, n: int, rng: Xoshiro256) -> PatternSet:
    if point.pattern_kind is EnsembleKind.FILE:
        key = (point.source, n)
        if key not in _file_cache:
            _file_cache[key] = load_patterns(point.source, n)
        return _file_cache[key]
    params = ModelParams(n=n, N=point.N, p=point.p)
    if point.pattern_kind is EnsembleKind.CORRELATED:
        return generate_correlated(params, rng)
    return generate_random(params, rng)


@dataclass
class _Trial:
    outcome: TrialOutcome
    patterns: PatternSet | None = None


def run_trial(point: GridPoint, trial_index: int, master_seed: int,
              settings: TrialSettings = TrialSettings()) -> TrialOutcome:
    """One deterministic trial: draw patterns, corrupt, run the dynamics."""
    return _run_trial(point, trial_index, master_seed, settings).outcome


def _run_trial(point: GridPoint, trial_index: int, master_seed: int, grid: TrialSettings,
               keep_patterns: bool = False) -> _Trial:
    rng = Xoshiro256(derive_seed(master_seed, point.kind.value, point.seed_index, trial_index))
    patterns = _patterns_for(point, grid.n, rng)
    target = trial_index % patterns.p
    cfg = SweepConfig(target=target, mode=point.mode, max_sweeps=grid.max_sweeps, omega=grid.omega)
    if point.kind is ExperimentKind.ADVERSARIAL:
        adv = AdversaryConfig(point.adversary, point.rho, grid.rounds, grid.gamma)
        outcome = robustness_protocol(patterns, target, adv, cfg, rng)
    else:
        if point.m0 is not None:
            state = corrupt_count(patterns, target, round_half_up(patterns.N * (1 - point.m0) / 2), rng)
        else:
            state = corrupt_random(patterns, target, point.corruption, rng)
        outcome = retrieve(patterns, state, cfg, rng)
    return _Trial(outcome, patterns if keep_patterns else None)


def _map_trials(fn: Callable[[int], _Trial], trials: int, threads: int) -> list[_Trial]:
    if threads <= 1 or trials == 1:
        return [fn(t) for t in range(trials)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(trials)))


def run_point(point: GridPoint, grid: ExperimentGrid, point_index: int, threads: int = 1) -> ExperimentRecord:
    try:
        results = _map_trials(
            lambda t: _run_trial(point, t, grid.master_seed, grid.settings, keep_patterns=(t == 0)),
            grid.trials, threads,
        )
    except Exception as exc:  # per-point failures are recorded, the run continues
        log.exception("grid point %s failed", point)
        return ExperimentRecord(point, grid.trials, 0, 0.0, None, None, None, None, error=repr(exc))
    outcomes = [r.outcome for r in results]
    succ = [o.converged for o in outcomes]
    sweeps = [o.sweeps_used for o, ok in zip(outcomes, succ) if ok]
    boot_rng = Xoshiro256(derive_seed(grid.master_seed, point.kind.value + "/bootstrap", point_index, 0))
    if point.kind in (ExperimentKind.CONVERGENCE, ExperimentKind.BASIN):
        ci = bootstrap_ci(sweeps, resamples=grid.resamples, rng=boot_rng) if sweeps else None
    else:
        ci = bootstrap_ci([float(s) for s in succ], resamples=grid.resamples, rng=boot_rng)
    beta = beta_patterns(results[0].patterns) if grid.measure_beta else None
    params = ModelParams(n=grid.n, N=point.N, p=point.p)
    return ExperimentRecord(
        point=point,
        trials=grid.trials,
        successes=int(sum(succ)),
        success_rate=sum(succ) / grid.trials,
        mean_sweeps=float(np.mean(sweeps)) if sweeps else None,
        ci=ci,
        beta_measured=beta,
        theory=theory(params, gamma=grid.gamma, beta=beta),
    )


def run_experiment(grid: ExperimentGrid, threads: int = 1,
                   progress: Callable[[ExperimentRecord], None] | None = None) -> list[ExperimentRecord]:
    """Run every grid point; records come back in grid order."""
    records = []
    for idx, point in enumerate(expand_grid(grid)):
        rec = run_point(point, grid, idx, threads)
        records.append(rec)
        if progress is not None:
            progress(rec)
    return records


def average_over_N(records: Sequence[ExperimentRecord]) -> dict[tuple[float, float], float]:
    """Equal-weight mean of per-N success rates, keyed by (loading, corruption)."""
    groups: dict[tuple[float, float], list[float]] = {}
    for r in records:
        groups.setdefault((r.point.loading, r.point.corruption), []).append(r.success_rate)
    return {key: float(np.mean(v)) for key, v in groups.items()}


# capacity -----------------------------------------------------------------


@dataclass(frozen=True)
class CapacitySearchConfig:
    trials: int = 40
    pass_fraction: float = 0.95
    corruption: float = 0.15
    max_sweeps: int = 60
    omega: float = 0.95
    max_verify: int = 64

    @property
    def required(self) -> int:
        return math.ceil(round(self.pass_fraction * self.trials, 9))


@dataclass
class CapacityPoint:
    N: int
    p_max: int
    alpha_eff: float
    probes: list[tuple[int, bool]] = field(default_factory=list)


@dataclass
class CapacityResult:
    n: int
    points: list[CapacityPoint]
    fit: PowerLawFit | None


def capacity_predicate(N: int, p: int, n: int, cfg: CapacitySearchConfig, master_seed: int, attempt: int = 0,
                       threads: int = 1) -> bool:
    """One probe: fresh pattern set, ``cfg.trials`` retrievals, pass if enough converge."""
    probe_seed = derive_seed(master_seed, "capacity", N, (attempt << 32) | p)
    patterns = generate_random(ModelParams(n=n, N=N, p=p), Xoshiro256(probe_seed))
    allowed_failures = cfg.trials - cfg.required

    def one(t: int) -> bool:
        rng = Xoshiro256(derive_seed(probe_seed, "capacity/trial", 0, t))
        target = t % p
        state = corrupt_random(patterns, target, cfg.corruption, rng)
        sweep = SweepConfig(target=target, max_sweeps=cfg.max_sweeps, omega=cfg.omega)
        return retrieve(patterns, state, sweep, rng).converged

    failures = 0
    chunk = max(1, threads)
    for start in range(0, cfg.trials, chunk):
        batch = range(start, min(start + chunk, cfg.trials))
        if chunk == 1:
            results = [one(t) for t in batch]
        else:
            with ThreadPoolExecutor(max_workers=chunk) as pool:
                results = list(pool.map(one, batch))
        failures += results.count(False)
        if failures > allowed_failures:
            return False
    return True


def capacity_search(N: int, n: int = 3, cfg: CapacitySearchConfig | None = None, master_seed: int = 42,
                    threads: int = 1) -> CapacityPoint:
    """Largest p passing the probe, by bisection on [1, ceil(2 N^(n-1) / n)].

    Stops once the bracket is no wider than max(1, p/64), then re-tests the
    answer with fresh draws, stepping down until a re-test passes.
    """
    cfg = cfg or CapacitySearchConfig()
    probes: list[tuple[int, bool]] = []

    def test(p: int, attempt: int = 0) -> bool:
        ok = capacity_predicate(N, p, n, cfg, master_seed, attempt, threads)
        probes.append((p, ok))
        log.debug("capacity N=%d p=%d attempt=%d -> %s", N, p, attempt, ok)
        return ok

    upper = math.ceil(2 * N ** (n - 1) / n)
    if not test(1):
        return CapacityPoint(N, 0, 0.0, probes)
    lo, hi = 1, upper + 1  # hi is treated as failing
    while hi - lo > max(1, lo / 64):
        mid = (lo + hi) // 2
        if test(mid):
            lo = mid
        else:
            hi = mid
    attempt = 1
    while lo > 1 and attempt <= cfg.max_verify and not test(lo, attempt):
        lo = max(1, lo - max(1, lo // 64))
        attempt += 1
    return CapacityPoint(N, lo, lo / N ** (n - 1), probes)


def run_capacity(Ns: Sequence[int], n: int = 3, cfg: CapacitySearchConfig | None = None, master_seed: int = 42,
                 threads: int = 1, progress: Callable[[CapacityPoint], None] | None = None) -> CapacityResult:
    points = []
    for N in Ns:
        pt = capacity_search(N, n, cfg, master_seed, threads)
        points.append(pt)
        if progress is not None:
            progress(pt)
    usable = [(pt.N, pt.p_max) for pt in points if pt.p_max > 0]
    fit = fit_power_law(usable) if len(usable) >= 2 else None
    return CapacityResult(n, points, fit)

