"""Bootstrap intervals, threshold interpolation and log-log power-law fits."""

from __future__ import annotations

import math
from typing import NamedTuple, Sequence

import numpy as np

from . import _kernels as K
from .rng import Xoshiro256


def _nearest_rank(sorted_vals: np.ndarray, q: float) -> float:
    # rounding guards against 0.025 * 2000 = 50.000000000000004
    rank = max(1, math.ceil(round(q * sorted_vals.size, 9)))
    return float(sorted_vals[min(rank, sorted_vals.size) - 1])


def bootstrap_ci(
    samples: Sequence[float],
    level: float = 0.95,
    resamples: int = 2000,
    rng: Xoshiro256 | None = None,
) -> tuple[float, float]:
    """Percentile bootstrap interval for the sample mean (nearest-rank percentiles)."""
    values = np.asarray(samples, dtype=np.float64)
    if values.size == 0:
        raise ValueError("bootstrap_ci needs at least one sample")
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    rng = rng or Xoshiro256(42)
    means = np.sort(K.bootstrap_means(values, resamples, rng.state))
    tail = (1 - level) / 2
    low = _nearest_rank(means, tail)
    high = _nearest_rank(means, 1 - tail)
    # keep float summation noise from leaving [min, max]
    lo, hi = float(values.min()), float(values.max())
    return min(max(low, lo), hi), min(max(high, lo), hi)


class ThresholdEstimate(NamedTuple):
    value: float
    raw: float
    crossed: bool


def estimate_threshold(curve: Sequence[tuple[float, float]], level: float = 0.5, resolution: float | None = 0.01) -> ThresholdEstimate:
    """Where a decreasing success curve first drops below ``level`` for good.

    Interpolates linearly between the last point at or above ``level`` and
    the next point below it. Without a crossing the boundary abscissa is
    returned with ``crossed=False``.
    """
    pts = sorted((float(x), float(y)) for x, y in curve)
    if not pts:
        raise ValueError("empty curve")
    above = [k for k, (_, y) in enumerate(pts) if y >= level]
    if not above:
        return ThresholdEstimate(pts[0][0], pts[0][0], False)
    last = above[-1]
    if last == len(pts) - 1:
        return ThresholdEstimate(pts[-1][0], pts[-1][0], False)
    (x0, y0), (x1, y1) = pts[last], pts[last + 1]
    raw = x0 + (x1 - x0) * (y0 - level) / (y0 - y1)
    value = raw if resolution is None else round(round(raw / resolution) * resolution, 10)
    return ThresholdEstimate(value, raw, True)


class PowerLawFit(NamedTuple):
    prefactor: float
    exponent: float
    r_squared: float

    def predict(self, N: float) -> float:
        return self.prefactor * N**self.exponent


def fit_power_law(points: Sequence[tuple[float, float]]) -> PowerLawFit:
    """Ordinary least squares on (log N, log p)."""
    if len(points) < 2:
        raise ValueError("need at least two points")
    xs = np.array([p[0] for p in points], dtype=np.float64)
    ys = np.array([p[1] for p in points], dtype=np.float64)
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise ValueError("power-law fit needs positive values")
    lx, ly = np.log(xs), np.log(ys)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - float(np.sum(resid**2)) / ss_tot
    return PowerLawFit(float(math.exp(intercept)), float(slope), min(max(r2, 0.0), 1.0))
