"""Replica farms and front statistics for single walks and two-color arenas.

Every experiment is a pure function of (laws, parameters, master seed): each
replica draws from its own stream derived as (master seed, replica index),
so results are independent of scheduling and identical configs reproduce
byte-identical CSV output.  Censored replicas are always counted and
reported, never dropped.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__ as _pkg_version
from . import stats
from .calibration import CalibrationResult, centering, fluct_bounds, solve_theta
from .competition import (
    ArenaState,
    arena_init,
    arena_rngs,
    arena_step,
    color_counts,
    frontier_gaps,
    hole_census,
    window_presence,
    WindowOutOfRange,
)
from .engine import (
    EngineConfig,
    advance,
    default_window_width,
    init,
)
from .genealogy import Tree, democracy_curve, grow
from .offspring import OffspringSpec, from_obj, load_spec, support_bound, to_obj


@dataclass
class ExperimentConfig:
    """File-level configuration shared by the experiment commands.

    ``red_spec``/``blue_spec`` may be law-document paths (resolved relative
    to the config file) or inline documents.  Command-specific fields are
    ignored by commands that do not use them.
    """

    red_spec: str | dict | None = None
    blue_spec: str | dict | None = None
    horizon: int = 200
    replicas: int = 100
    z_grid: list[float] = field(default_factory=lambda: [2.0, 3.0, 4.0, 5.0])
    c1: float = 0.5
    c2: float = 2.0
    generation_cap: int | None = None
    mode: str = "exact"
    window_width: int | None = None
    count_cap: int | None = None
    master_seed: int = 0
    tie_break: str = "red_first"
    red_start: int = 0
    blue_start: int = 1
    analysis: str = "record"
    record_replicas: int = 1
    count_threshold: int = 50
    n0: int | None = None
    hole_window: int | None = None
    n: int = 50
    n_grid: list[int] = field(default_factory=lambda: [100, 200])
    epsilon: float = 0.5
    q: int = 3
    horizons: list[int] = field(default_factory=lambda: [6, 10, 14])
    trees: int = 1000
    max_individuals: int = 10**7
    start: int = 0
    with_totals: bool = True
    min_exceedances: int = 50
    out: str | None = None

    def __post_init__(self):
        if self.replicas < 1:
            raise ValueError("replicas must be >= 1")
        zs = list(self.z_grid)
        if any(b <= a for a, b in zip(zs, zs[1:])):
            raise ValueError("z_grid must be strictly increasing")
        if not self.c1 < self.c2:
            raise ValueError("need c1 < c2")

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        path = Path(path)
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        cfg = cls(**raw)
        for attr in ("red_spec", "blue_spec"):
            value = getattr(cfg, attr)
            if isinstance(value, str):
                setattr(cfg, attr, to_obj(load_spec(path.parent / value)))
        return cfg

    def spec(self, which: str = "red_spec") -> OffspringSpec:
        value = getattr(self, which)
        if value is None:
            raise ValueError(f"config has no {which}")
        return from_obj(value)


class InsufficientData(RuntimeError):
    """Too few usable replicas for the requested estimate."""


class InsufficientTail(RuntimeError):
    """The empirical tail has too few well-populated points to fit."""


class HypothesisViolation(ValueError):
    """The two laws fail the matching required by the experiment."""


def replica_rng(master_seed: int, replica_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((master_seed, replica_index)))


def aux_rng(master_seed: int, label: int) -> np.random.Generator:
    # streams for estimator-internal randomness (bootstraps), disjoint from replicas
    return np.random.default_rng(np.random.SeedSequence((master_seed, 0x626F6F74, label)))


def engine_config(
    spec: OffspringSpec,
    mode: str = "exact",
    window_width: int | None = None,
    count_cap: int | None = None,
    calib: CalibrationResult | None = None,
    companion: OffspringSpec | None = None,
) -> EngineConfig:
    """Engine knobs for a law, deriving the frontier window when missing.

    The default window is wide enough that dropped sites cannot influence
    the front within any desk-scale horizon; arena runs take the widest
    window over both laws.
    """
    kwargs = {} if count_cap is None else {"count_cap": count_cap}
    if mode != "frontier":
        return EngineConfig(mode=mode, **kwargs)
    if window_width is None:
        widths = []
        for s in (spec, companion) if companion is not None else (spec,):
            c = solve_theta(s) if s is not spec or calib is None else calib
            widths.append(default_window_width(c.theta_o, int(support_bound(s))))
        window_width = max(widths)
    cfg = EngineConfig(mode="frontier", window_width=window_width, **kwargs)
    cfg.validate_for(spec)
    if companion is not None:
        cfg.validate_for(companion)
    return cfg


# ---------------------------------------------------------------------------
# single-walk trajectories
# ---------------------------------------------------------------------------

@dataclass
class TrajectoryRecord:
    """Per-generation maxima/minima of one replica (arrays span 0..horizon)."""

    max_pos: np.ndarray
    min_pos: np.ndarray
    totals: list[int]
    saturated: np.ndarray

    def rows(self) -> list[list]:
        return [
            [n, int(self.max_pos[n]), int(self.min_pos[n]), self.totals[n],
             int(self.saturated[n])]
            for n in range(self.max_pos.shape[0])
        ]


def simulate_trajectory(
    spec: OffspringSpec,
    horizon: int,
    config: EngineConfig,
    rng: np.random.Generator,
    start: int = 0,
    with_totals: bool = True,
) -> TrajectoryRecord:
    state = init(start, config.mode)
    m = np.empty(horizon + 1, dtype=np.int64)
    l = np.empty(horizon + 1, dtype=np.int64)
    sat = np.zeros(horizon + 1, dtype=bool)
    totals: list[int] = []
    m[0], l[0] = start, start
    totals.append(1 if with_totals else -1)
    for n in range(1, horizon + 1):
        state = advance(state, spec, config, rng)
        m[n], l[n] = state.max_pos, state.min_pos
        sat[n] = state.saturated
        totals.append(state.total() if with_totals else -1)
    return TrajectoryRecord(max_pos=m, min_pos=l, totals=totals, saturated=sat)


def max_at(
    spec: OffspringSpec,
    horizon: int,
    config: EngineConfig,
    rng: np.random.Generator,
    checkpoints: Sequence[int],
) -> list[int]:
    """Maximum position at each checkpoint generation, one pass."""
    todo = sorted(set(checkpoints))
    state = init(0, config.mode)
    out = {}
    for n in range(1, todo[-1] + 1):
        state = advance(state, spec, config, rng)
        if n in todo:
            out[n] = state.max_pos
    return [out[int(c)] for c in checkpoints]


# ---------------------------------------------------------------------------
# overshoot times of the centered maximum
# ---------------------------------------------------------------------------

@dataclass
class OvershootSample:
    z: float
    time: int | None
    censored: bool
    cap: int


def estimate_overshoot_time(
    spec: OffspringSpec,
    calib: CalibrationResult,
    z: float,
    generation_cap: int,
    rng: np.random.Generator,
    config: EngineConfig,
) -> OvershootSample:
    """First generation with max - centering > z; censored at the cap.

    The scan starts at generation 1 because the centering carries a log n
    term and is undefined at 0.
    """
    if z <= 0:
        raise ValueError("overshoot level z must be positive")
    state = init(0, config.mode)
    for n in range(1, generation_cap + 1):
        state = advance(state, spec, config, rng)
        if state.max_pos - centering(calib, n) > z:
            return OvershootSample(z=z, time=n, censored=False, cap=generation_cap)
    return OvershootSample(z=z, time=None, censored=True, cap=generation_cap)


def _auto_cap(calib: CalibrationResult, z: float) -> int:
    return math.ceil(math.exp(1.5 * calib.theta_o * z))


@dataclass
class OvershootReport:
    z_grid: list[float]
    replicas: int
    caps: list[int]
    times: list[list[int]]            # uncensored hit times per z
    censored: list[int]               # censored replica count per z
    median_log_time: list[float]
    slope: float
    intercept: float
    ci_low: float
    ci_high: float

    def to_dict(self) -> dict:
        return asdict(self)


def overshoot_scaling(
    spec: OffspringSpec,
    calib: CalibrationResult,
    z_grid: Sequence[float],
    replicas: int,
    master_seed: int,
    config: EngineConfig,
    generation_cap: int | None = None,
    n_boot: int = 500,
    min_uncensored: int = 30,
) -> OvershootReport:
    """Least-squares slope of median log hit time against the level z."""
    if len(z_grid) < 3:
        raise InsufficientData("need at least 3 overshoot levels")
    times: list[list[int]] = []
    censored: list[int] = []
    caps: list[int] = []
    replica_counter = 0
    for z in z_grid:
        cap = generation_cap if generation_cap is not None else _auto_cap(calib, z)
        caps.append(cap)
        hits: list[int] = []
        n_cens = 0
        for _ in range(replicas):
            rng = replica_rng(master_seed, replica_counter)
            replica_counter += 1
            s = estimate_overshoot_time(spec, calib, z, cap, rng, config)
            if s.censored:
                n_cens += 1
            else:
                hits.append(s.time)
        if len(hits) < min_uncensored:
            raise InsufficientData(
                f"only {len(hits)} uncensored replicas at z={z} (need {min_uncensored})"
            )
        times.append(hits)
        censored.append(n_cens)

    meds = [float(np.median(np.log(np.asarray(t, dtype=float)))) for t in times]
    slope, intercept = stats.fit_line(list(z_grid), meds)
    lo, hi = stats.bootstrap_slope_ci(
        list(z_grid), times, aux_rng(master_seed, 1), n_boot=n_boot
    )
    return OvershootReport(
        z_grid=[float(z) for z in z_grid],
        replicas=replicas,
        caps=caps,
        times=times,
        censored=censored,
        median_log_time=meds,
        slope=slope,
        intercept=intercept,
        ci_low=lo,
        ci_high=hi,
    )


# ---------------------------------------------------------------------------
# tail of the centered maximum at a fixed generation
# ---------------------------------------------------------------------------

@dataclass
class TailReport:
    n: int
    replicas: int
    theta: float
    x: list[float]
    survival: list[float]
    exceedances: list[int]
    fit_lo: float
    fit_hi: float
    rate: float
    bound_constant: float
    bound_majorizes: bool

    def to_dict(self) -> dict:
        return asdict(self)


def tail_fit(
    spec: OffspringSpec,
    calib: CalibrationResult,
    n: int,
    replicas: int,
    master_seed: int,
    config: EngineConfig,
    min_exceedances: int = 50,
) -> TailReport:
    """Fit the exponential decay of P(max - centering > x).

    The rate comes from least squares on the log survival over x >= 0 where
    at least ``min_exceedances`` samples remain; the reported constant is
    the tightest C making C*(1 + theta*x_+)e^{-theta*x} majorize the whole
    well-populated part of the curve.
    """
    if centering(calib, n) <= 0:
        raise ValueError(f"generation {n} too small: centering not yet positive")
    m_n = centering(calib, n)
    samples = np.empty(replicas)
    for r in range(replicas):
        rng = replica_rng(master_seed, r)
        samples[r] = max_at(spec, n, config, rng, [n])[0] - m_n

    xs, surv, exceed = stats.empirical_survival(samples)
    # survival is evaluated strictly above each point; the last point has
    # zero exceedances and is dropped from all fitting
    ok = exceed >= min_exceedances
    fit = ok & (xs >= 0.0)
    if int(fit.sum()) < 3:
        raise InsufficientTail(
            f"only {int(fit.sum())} tail points with >= {min_exceedances} exceedances"
        )
    slope, _ = stats.fit_line(xs[fit], np.log(surv[fit]))
    theta = calib.theta_o
    shape = (1.0 + theta * np.maximum(xs[ok], 0.0)) * np.exp(-theta * xs[ok])
    c_fit = float(np.max(surv[ok] / shape))
    majorizes = bool(np.all(c_fit * shape >= surv[ok] - 1e-12))
    return TailReport(
        n=n,
        replicas=replicas,
        theta=theta,
        x=[float(v) for v in xs],
        survival=[float(v) for v in surv],
        exceedances=[int(v) for v in exceed],
        fit_lo=float(xs[fit].min()),
        fit_hi=float(xs[fit].max()),
        rate=-slope,
        bound_constant=c_fit,
        bound_majorizes=majorizes,
    )


# ---------------------------------------------------------------------------
# second-order fluctuation windows
# ---------------------------------------------------------------------------

@dataclass
class FluctReport:
    n_grid: list[int]
    replicas: int
    window_low: float
    window_high: float
    epsilon: float
    mean: list[float]
    quantiles: dict[str, list[float]]
    fraction_in_window: list[float]
    samples: list[list[float]]

    def to_dict(self) -> dict:
        return asdict(self)


def fluctuation_windows(
    spec: OffspringSpec,
    calib: CalibrationResult,
    n_grid: Sequence[int],
    replicas: int,
    master_seed: int,
    config: EngineConfig,
    epsilon: float = 0.5,
) -> FluctReport:
    """Distribution of (max - speed*n)/log n against the liminf/limsup band."""
    ns = [int(n) for n in n_grid]
    if any(n < 2 for n in ns):
        raise ValueError("fluctuation statistic needs n >= 2 (log n > 0)")
    lo, hi = fluct_bounds(calib)
    per_n = np.empty((replicas, len(ns)))
    for r in range(replicas):
        rng = replica_rng(master_seed, r)
        maxima = max_at(spec, max(ns), config, rng, ns)
        for j, n in enumerate(ns):
            per_n[r, j] = (maxima[j] - n * calib.kappa_prime_at) / math.log(n)

    qlevels = [0.05, 0.25, 0.5, 0.75, 0.95]
    quantiles = {
        f"q{int(100 * q):02d}": [float(v) for v in np.quantile(per_n, q, axis=0)]
        for q in qlevels
    }
    frac = [
        float(np.mean((per_n[:, j] >= lo - epsilon) & (per_n[:, j] <= hi + epsilon)))
        for j in range(len(ns))
    ]
    return FluctReport(
        n_grid=ns,
        replicas=replicas,
        window_low=lo,
        window_high=hi,
        epsilon=epsilon,
        mean=[float(v) for v in per_n.mean(axis=0)],
        quantiles=quantiles,
        fraction_in_window=frac,
        samples=[[float(v) for v in per_n[:, j]] for j in range(len(ns))],
    )


# ---------------------------------------------------------------------------
# arena farms
# ---------------------------------------------------------------------------

@dataclass
class ArenaReplica:
    """Per-generation series of one arena replica."""

    m_red: np.ndarray
    l_red: np.ndarray
    m_blue: np.ndarray
    l_blue: np.ndarray
    red_sites: np.ndarray
    blue_sites: np.ndarray
    new_red: np.ndarray
    new_blue: np.ndarray
    holes_even: np.ndarray
    holes_odd: np.ndarray

    @property
    def right_gap(self) -> np.ndarray:
        return self.m_blue - self.m_red

    @property
    def left_gap(self) -> np.ndarray:
        return self.l_red - self.l_blue


def run_arena_replica(
    red_spec: OffspringSpec,
    blue_spec: OffspringSpec,
    horizon: int,
    config: EngineConfig,
    rngs,
    tie_break: str = "red_first",
    red_start: int = 0,
    blue_start: int = 1,
    hole_window: int | None = None,
) -> tuple[ArenaReplica, ArenaState]:
    hw = hole_window if hole_window is not None else max(1, int(support_bound(red_spec)))
    state = arena_init(red_start, blue_start, tie_break, rngs.tie, config.mode)
    size = horizon + 1
    rec = ArenaReplica(
        m_red=np.empty(size, np.int64), l_red=np.empty(size, np.int64),
        m_blue=np.empty(size, np.int64), l_blue=np.empty(size, np.int64),
        red_sites=np.empty(size, np.int64), blue_sites=np.empty(size, np.int64),
        new_red=np.zeros(size, np.int64), new_blue=np.zeros(size, np.int64),
        holes_even=np.empty(size, np.int64), holes_odd=np.empty(size, np.int64),
    )

    def record(n: int, st: ArenaState) -> None:
        rec.m_red[n], rec.l_red[n] = st.red.max_pos, st.red.min_pos
        rec.m_blue[n], rec.l_blue[n] = st.blue.max_pos, st.blue.min_pos
        rec.red_sites[n], rec.blue_sites[n] = color_counts(st)
        rec.new_red[n], rec.new_blue[n] = st.last_new_red, st.last_new_blue
        census = hole_census(st, hw)
        rec.holes_even[n], rec.holes_odd[n] = census.right_even, census.right_odd

    record(0, state)
    for n in range(1, horizon + 1):
        state = arena_step(state, red_spec, blue_spec, config, rngs)
        record(n, state)
    return rec, state


def _count_sign_swaps(series: np.ndarray) -> int:
    signs = np.sign(series)
    signs = signs[signs != 0]
    if signs.size < 2:
        return 0
    return int(np.count_nonzero(np.diff(signs) != 0))


@dataclass
class CoexistenceReport:
    replicas: int
    horizon: int
    count_threshold: int
    fraction_both_exceed: float
    fraction_with_swap: float
    mean_swaps: float
    final_red_sites: list[int]
    final_blue_sites: list[int]
    swaps: list[int]
    dyadic_windows: list[list[int]]
    dyadic_both_fraction: list[float]
    smoke_windows: list[dict]

    def to_dict(self) -> dict:
        return asdict(self)


def run_coexistence(
    red_spec: OffspringSpec,
    blue_spec: OffspringSpec,
    horizon: int,
    replicas: int,
    master_seed: int,
    config: EngineConfig,
    tie_break: str = "red_first",
    red_start: int = 0,
    blue_start: int = 1,
    count_threshold: int = 50,
    z_grid: Sequence[float] = (),
    c1: float = 0.5,
    c2: float = 2.0,
    match_tol: float = 1e-10,
    collect: list | None = None,
) -> CoexistenceReport:
    """Matched-law arena farm: growth of both color counts and lead swaps.

    Requires the two laws to share the tangent point and the transform value
    there (the regime where both fronts have the same first- and
    second-order behavior).
    """
    calib_r = solve_theta(red_spec)
    calib_b = solve_theta(blue_spec)
    if (
        abs(calib_r.theta_o - calib_b.theta_o) > match_tol
        or abs(calib_r.kappa_at - calib_b.kappa_at) > match_tol
    ):
        raise HypothesisViolation(
            "laws are not calibration-matched: "
            f"theta {calib_r.theta_o!r} vs {calib_b.theta_o!r}, "
            f"kappa {calib_r.kappa_at!r} vs {calib_b.kappa_at!r}"
        )

    final_r: list[int] = []
    final_b: list[int] = []
    swaps: list[int] = []
    dyadic: list[list[int]] = []
    dyadic_hits: dict[int, int] = {}
    dyadic_seen: dict[int, int] = {}
    smoke: list[dict] = []

    for r in range(replicas):
        rngs = arena_rngs(master_seed, r)
        rec, state = run_arena_replica(
            red_spec, blue_spec, horizon, config, rngs, tie_break,
            red_start, blue_start,
        )
        if collect is not None:
            collect.append(rec)
        nr, nb = color_counts(state)
        final_r.append(nr)
        final_b.append(nb)
        swaps.append(_count_sign_swaps(rec.right_gap))
        js = []
        j = 0
        while 2 ** (j + 1) <= state.explored_max:
            both = window_presence(state, 2**j, 2 ** (j + 1))
            dyadic_seen[j] = dyadic_seen.get(j, 0) + 1
            if both[0] and both[1]:
                dyadic_hits[j] = dyadic_hits.get(j, 0) + 1
                js.append(j)
            j += 1
        dyadic.append(js)
        if r == 0:
            for z in z_grid:
                lo, hi = math.exp(c1 * z), math.exp(c2 * z)
                try:
                    red_in, blue_in = window_presence(state, lo, hi)
                    smoke.append(
                        {"z": float(z), "lo": lo, "hi": hi,
                         "red": red_in, "blue": blue_in, "skipped": False}
                    )
                except WindowOutOfRange:
                    smoke.append(
                        {"z": float(z), "lo": lo, "hi": hi,
                         "red": None, "blue": None, "skipped": True}
                    )

    both_frac = float(
        np.mean(
            [
                (a > count_threshold) and (b > count_threshold)
                for a, b in zip(final_r, final_b)
            ]
        )
    )
    max_j = max(dyadic_seen) if dyadic_seen else -1
    return CoexistenceReport(
        replicas=replicas,
        horizon=horizon,
        count_threshold=count_threshold,
        fraction_both_exceed=both_frac,
        fraction_with_swap=float(np.mean([s > 0 for s in swaps])),
        mean_swaps=float(np.mean(swaps)),
        final_red_sites=final_r,
        final_blue_sites=final_b,
        swaps=swaps,
        dyadic_windows=dyadic,
        dyadic_both_fraction=[
            dyadic_hits.get(j, 0) / dyadic_seen[j] if dyadic_seen.get(j) else 0.0
            for j in range(max_j + 1)
        ],
        smoke_windows=smoke,
    )


@dataclass
class NoncoexistenceReport:
    replicas: int
    horizon: int
    n0: int
    gap_slopes: list[float]
    fraction_positive_slope: float
    plateau_stats: list[float]
    median_plateau: float
    last_fresh_red: list[int]
    final_right_gap: list[int]
    mean_holes_even: float
    mean_holes_odd: float

    def to_dict(self) -> dict:
        return asdict(self)


def run_noncoexistence(
    red_spec: OffspringSpec,
    blue_spec: OffspringSpec,
    horizon: int,
    replicas: int,
    master_seed: int,
    config: EngineConfig,
    tie_break: str = "red_first",
    red_start: int = 0,
    blue_start: int = 1,
    n0: int | None = None,
    hole_window: int | None = None,
    collect: list | None = None,
) -> NoncoexistenceReport:
    """Gap-growth arena farm: right-gap regression and red-plateau detection.

    The per-replica slope regresses the right gap on log n over [n0,
    horizon]; the plateau statistic is the fraction of the final fifth of
    generations in which red colored no fresh site.
    """
    if n0 is None:
        n0 = max(10, horizon // 10)
    if not (1 <= n0 < horizon):
        raise ValueError(f"n0={n0} outside [1, horizon)")
    tail_start = horizon - max(1, horizon // 5) + 1

    slopes: list[float] = []
    plateaus: list[float] = []
    last_fresh: list[int] = []
    final_gap: list[int] = []
    he: list[float] = []
    ho: list[float] = []
    log_n = np.log(np.arange(n0, horizon + 1, dtype=float))

    for r in range(replicas):
        rngs = arena_rngs(master_seed, r)
        rec, state = run_arena_replica(
            red_spec, blue_spec, horizon, config, rngs, tie_break,
            red_start, blue_start, hole_window,
        )
        if collect is not None:
            collect.append(rec)
        gap = rec.right_gap
        slopes.append(stats.fit_line(log_n, gap[n0:])[0])
        tail_new = rec.new_red[tail_start:]
        plateaus.append(float(np.mean(tail_new == 0)))
        fresh = np.nonzero(rec.new_red)[0]
        last_fresh.append(int(fresh[-1]) if fresh.size else 0)
        final_gap.append(int(gap[-1]))
        he.append(float(rec.holes_even[tail_start:].mean()))
        ho.append(float(rec.holes_odd[tail_start:].mean()))

    return NoncoexistenceReport(
        replicas=replicas,
        horizon=horizon,
        n0=n0,
        gap_slopes=slopes,
        fraction_positive_slope=float(np.mean([s > 0 for s in slopes])),
        plateau_stats=plateaus,
        median_plateau=float(np.median(plateaus)),
        last_fresh_red=last_fresh,
        final_right_gap=final_gap,
        mean_holes_even=float(np.mean(he)),
        mean_holes_odd=float(np.mean(ho)),
    )


# ---------------------------------------------------------------------------
# democracy farm
# ---------------------------------------------------------------------------

@dataclass
class DemocracyReport:
    q: int
    horizons: list[int]
    trees: int
    mean_fraction: list[float]
    std_fraction: list[float]

    def to_dict(self) -> dict:
        return asdict(self)


def run_democracy(
    spec: OffspringSpec,
    q: int,
    horizons: Sequence[int],
    trees: int,
    master_seed: int,
    max_individuals: int = 10**7,
) -> DemocracyReport:
    """Mean democracy fraction across independently grown trees."""
    hs = [int(h) for h in horizons]
    curves = np.empty((trees, len(hs)))
    top = max(hs)
    for t in range(trees):
        rng = replica_rng(master_seed, t)
        tree = grow(spec, top, rng, max_individuals)
        curves[t] = democracy_curve(tree, q, hs)
    return DemocracyReport(
        q=q,
        horizons=hs,
        trees=trees,
        mean_fraction=[float(v) for v in curves.mean(axis=0)],
        std_fraction=[float(v) for v in curves.std(axis=0)],
    )


# ---------------------------------------------------------------------------
# CSV + manifest output
# ---------------------------------------------------------------------------

def format_cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def csv_text(header: Sequence[str], rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_cell(v) for v in row))
    return "\n".join(lines) + "\n"


def write_text(path, text: str) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def trajectory_csv(records: Sequence[TrajectoryRecord]) -> str:
    header = ["n", "M_n", "L_n", "total", "saturated_flag"]
    if len(records) == 1:
        return csv_text(header, records[0].rows())
    rows = []
    for i, rec in enumerate(records):
        rows.extend([[i] + row for row in rec.rows()])
    return csv_text(["replica"] + header, rows)


def arena_csv(records: Sequence[ArenaReplica]) -> str:
    header = [
        "n", "M_r", "L_r", "M_b", "L_b", "right_gap", "left_gap",
        "red_sites", "blue_sites", "holes_ahead_even", "holes_ahead_odd",
    ]

    def rows_for(rec: ArenaReplica):
        rg, lg = rec.right_gap, rec.left_gap
        for n in range(rec.m_red.shape[0]):
            yield [
                n, rec.m_red[n], rec.l_red[n], rec.m_blue[n], rec.l_blue[n],
                rg[n], lg[n], rec.red_sites[n], rec.blue_sites[n],
                rec.holes_even[n], rec.holes_odd[n],
            ]

    if len(records) == 1:
        return csv_text(header, rows_for(records[0]))
    rows = []
    for i, rec in enumerate(records):
        rows.extend([[i] + row for row in rows_for(rec)])
    return csv_text(["replica"] + header, rows)


def overshoot_csv(report: OvershootReport) -> str:
    rows = []
    for z, cap, hits, cens in zip(
        report.z_grid, report.caps, report.times, report.censored
    ):
        for t in hits:
            rows.append([z, t, 0, cap])
        for _ in range(cens):
            rows.append([z, -1, 1, cap])
    return csv_text(["z", "time", "censored", "cap"], rows)


def tail_csv(report: TailReport) -> str:
    rows = [
        [x, s, e]
        for x, s, e in zip(report.x, report.survival, report.exceedances)
    ]
    return csv_text(["x", "survival", "exceedances"], rows)


def fluct_csv(report: FluctReport) -> str:
    rows = []
    for j, n in enumerate(report.n_grid):
        for r, v in enumerate(report.samples[j]):
            rows.append([n, r, v])
    return csv_text(["n", "replica", "statistic"], rows)


def democracy_csv(report: DemocracyReport) -> str:
    rows = [
        [h, m, s, report.trees]
        for h, m, s in zip(report.horizons, report.mean_fraction, report.std_fraction)
    ]
    return csv_text(["horizon", "mean_fraction", "std_fraction", "trees"], rows)


def tree_csv(tree: Tree) -> str:
    rows = []
    for g in range(tree.horizon + 1):
        for i in range(tree.generation_size(g)):
            rows.append([g, i, int(tree.parents[g][i]), int(tree.positions[g][i])])
    return csv_text(["generation", "index", "parent_index", "position"], rows)


def run_manifest(config_obj: dict, master_seed: int) -> dict:
    canonical = json.dumps(config_obj, sort_keys=True, separators=(",", ":"))
    return {
        "config_sha256": hashlib.sha256(canonical.encode()).hexdigest(),
        "master_seed": master_seed,
        "package_version": _pkg_version,
        "numpy_version": np.__version__,
    }
