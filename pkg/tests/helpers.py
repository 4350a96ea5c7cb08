"""Shared builders and independent oracles for the test suite.

The oracles here deliberately avoid the library's own computation paths:
log-Laplace values come from direct arithmetic, tangent points from plain
bisection, and next-generation laws from per-particle sampling.
"""
from __future__ import annotations

import math
from collections import Counter

import numpy as np

import brwlab as B


# ---------------------------------------------------------------------------
# law builders
# ---------------------------------------------------------------------------

def spec_mean15_pm1() -> B.ProductForm:
    return B.ProductForm(B.CountLaw(((1, 0.5), (2, 0.5))), B.StepLaw.uniform([-1, 1]))


def spec_n3_u4() -> B.ProductForm:
    return B.ProductForm(B.CountLaw.fixed(3), B.StepLaw.uniform([-2, -1, 1, 2]))


def spec_mean2_pm1() -> B.ProductForm:
    return B.ProductForm(B.CountLaw.fixed(2), B.StepLaw.uniform([-1, 1]))


def spec_general_mixed() -> B.GeneralFinite:
    return B.GeneralFinite.from_outcomes(
        [
            ({0: 1}, 1.0 / 3.0),
            ({-1: 1, 1: 2}, 1.0 / 3.0),
            ({2: 2}, 1.0 / 3.0),
        ]
    )


def random_product_spec(rng: np.random.Generator) -> B.ProductForm:
    k = int(rng.integers(2, 5))
    support = rng.choice(np.arange(-5, 6), size=k, replace=False)
    w = rng.integers(1, 20, size=k).astype(float)
    step = B.StepLaw(tuple(zip(support.tolist(), (w / w.sum()).tolist())))
    counts = sorted(rng.choice(np.arange(1, 7), size=int(rng.integers(1, 4)), replace=False).tolist())
    cw = rng.integers(1, 10, size=len(counts)).astype(float)
    count = B.CountLaw(tuple(zip(counts, (cw / cw.sum()).tolist())))
    return B.ProductForm(count, step)


def random_general_spec(rng: np.random.Generator) -> B.GeneralFinite:
    n_out = int(rng.integers(2, 5))
    outcomes = []
    w = rng.integers(1, 10, size=n_out).astype(float)
    for i in range(n_out):
        size = int(rng.integers(1, 4))
        disps = rng.integers(-4, 5, size=size)
        ms: dict[int, int] = {}
        for d in disps.tolist():
            ms[d] = ms.get(d, 0) + 1
        outcomes.append((ms, float(w[i] / w.sum())))
    return B.GeneralFinite.from_outcomes(outcomes)


# ---------------------------------------------------------------------------
# independent numeric oracles
# ---------------------------------------------------------------------------

def kappa_oracle(spec, theta: float) -> float:
    """Direct arithmetic over the intensity table (no log-sum-exp)."""
    if isinstance(spec, B.ProductForm):
        pairs = [(d, spec.count.mean * p) for d, p in spec.step.atoms]
    else:
        pairs = list(spec.intensity().items())
    return math.log(sum(w * math.exp(theta * d) for d, w in pairs))


def central_difference(f, x: float, h: float = 1e-5) -> float:
    return (f(x + h) - f(x - h)) / (2.0 * h)


def second_difference(f, x: float, h: float = 1e-4) -> float:
    # wider step than the first difference: the double cancellation makes
    # roundoff ~ eps/h^2, which swamps 1e-6 accuracy below h ~ 1e-4
    return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)


def bisect_tangent(spec, lo: float = 1e-12, hi: float = 64.0, width: float = 1e-8) -> float:
    """Plain bisection for theta*kappa'(theta) = kappa(theta)."""

    def defect(th: float) -> float:
        return th * B.kappa_prime(spec, th) - B.kappa(spec, th)

    while defect(hi) <= 0:
        hi *= 2.0
        if hi > 1e6:
            raise AssertionError("oracle: no sign change")
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if defect(mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# next-generation law oracles
# ---------------------------------------------------------------------------

def _window(spec, occupancy: dict[int, int]) -> tuple[int, int]:
    from brwlab.offspring import max_displacement, min_displacement

    lo = min(occupancy) + int(min_displacement(spec))
    hi = max(occupancy) + int(max_displacement(spec))
    return lo, hi - lo + 1


def brute_next_scalar(spec, occupancy, rng) -> bytes:
    """One per-particle draw of the next occupancy (pure python loop)."""
    lo, width = _window(spec, occupancy)
    out = np.zeros(width, dtype=np.int64)
    for site, count in occupancy.items():
        for _ in range(count):
            for d, m in B.sample(spec, rng).multiplicities:
                out[site + int(d) - lo] += m
    return out.tobytes()


def brute_next_batch(spec, occupancy, trials: int, rng) -> np.ndarray:
    """(trials, width) per-particle next-occupancy samples, vectorized."""
    lo, width = _window(spec, occupancy)
    out = np.zeros((trials, width), dtype=np.int16)
    rows = np.arange(trials)
    if isinstance(spec, B.ProductForm):
        cvals = np.array([n for n, _ in spec.count.atoms], dtype=np.int64)
        ccdf = np.cumsum([p for _, p in spec.count.atoms])
        ccdf[-1] = 1.0
        svals = np.array([d for d, _ in spec.step.atoms], dtype=np.int64)
        scdf = np.cumsum([p for _, p in spec.step.atoms])
        scdf[-1] = 1.0
        for site, count in occupancy.items():
            for _ in range(count):
                n = cvals[np.searchsorted(ccdf, rng.random(trials), side="right")]
                disp = svals[np.searchsorted(scdf, rng.random(int(n.sum())), side="right")]
                np.add.at(out, (np.repeat(rows, n), site + disp - lo), 1)
    else:
        ocdf = np.cumsum([p for _, p in spec.outcomes])
        ocdf[-1] = 1.0
        atoms = [[(int(d), m) for d, m in outcome] for outcome, _ in spec.outcomes]
        for site, count in occupancy.items():
            for _ in range(count):
                idx = np.searchsorted(ocdf, rng.random(trials), side="right")
                for o, outcome in enumerate(atoms):
                    mask = idx == o
                    for d, m in outcome:
                        out[mask, site + d - lo] += m
    return out


def engine_next_key(spec, state0, config, rng, lo: int, width: int) -> bytes:
    st = B.step(state0, spec, config, rng)
    out = np.zeros(width, dtype=np.int64)
    out[st.origin - lo : st.origin - lo + st.occ.shape[0]] = st.occ
    return out.tobytes()


def batch_keys(matrix: np.ndarray) -> Counter:
    wide = matrix.astype(np.int64)
    return Counter(row.tobytes() for row in wide)


def total_variation(a: Counter, b: Counter, n: int) -> float:
    keys = set(a) | set(b)
    return 0.5 * sum(abs(a.get(k, 0) - b.get(k, 0)) for k in keys) / n
