"""Small statistical estimators used by the experiment layer.

Everything here is deliberately simple and deterministic given a generator:
straight-line least squares, empirical survival curves, a two-sample
Kolmogorov-Smirnov distance, and percentile bootstraps.  Each estimator has a
closed-form test case so it is validated before any Monte Carlo use.
"""
from __future__ import annotations

import numpy as np


def fit_line(x, y) -> tuple[float, float]:
    """Least-squares (slope, intercept) of y against x."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        raise ValueError("need at least two points for a slope")
    xm, ym = x.mean(), y.mean()
    var = float(np.sum((x - xm) ** 2))
    if var == 0.0:
        raise ValueError("x values are all equal")
    slope = float(np.sum((x - xm) * (y - ym)) / var)
    return slope, ym - slope * xm


def slope_of_median_logs(z_values, samples_per_z) -> float:
    """Slope of median(log samples) against z (the overshoot-scaling estimator)."""
    meds = [float(np.median(np.log(np.asarray(s, dtype=float)))) for s in samples_per_z]
    return fit_line(z_values, meds)[0]


def empirical_survival(samples) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(x, P(X > x), exceedance counts) at the unique sample values."""
    xs = np.sort(np.asarray(samples, dtype=float))
    ux = np.unique(xs)
    n = xs.size
    exceed = n - np.searchsorted(xs, ux, side="right")
    return ux, exceed / n, exceed


def ks_distance(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.abs(fa - fb).max())


def bootstrap_slope_ci(
    z_values,
    samples_per_z,
    rng: np.random.Generator,
    n_boot: int = 1000,
    level: float = 0.95,
) -> tuple[float, float]:
    """Percentile bootstrap CI for the median-log slope, resampling per z."""
    z = np.asarray(z_values, dtype=float)
    groups = [np.log(np.asarray(s, dtype=float)) for s in samples_per_z]
    slopes = np.empty(n_boot)
    for b in range(n_boot):
        meds = [
            float(np.median(g[rng.integers(0, g.size, g.size)])) for g in groups
        ]
        slopes[b] = fit_line(z, meds)[0]
    alpha = (1.0 - level) / 2.0
    return (
        float(np.quantile(slopes, alpha)),
        float(np.quantile(slopes, 1.0 - alpha)),
    )


def bootstrap_median_diff_lower(
    a,
    b,
    rng: np.random.Generator,
    n_boot: int = 2000,
    level: float = 0.95,
) -> float:
    """One-sided lower confidence bound for median(a) - median(b)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    diffs = np.empty(n_boot)
    for i in range(n_boot):
        da = np.median(a[rng.integers(0, a.size, a.size)])
        db = np.median(b[rng.integers(0, b.size, b.size)])
        diffs[i] = da - db
    return float(np.quantile(diffs, 1.0 - level))
