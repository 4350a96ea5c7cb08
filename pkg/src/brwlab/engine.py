"""Aggregate lattice engine for exponentially growing branching random walks.

Populations are stored as per-site counts over a contiguous integer window,
not as individual particles.  One generation advances all particles at a site
at once: the number of parents per count value is multinomial, and the pooled
children are spread over displacements multinomially.  The aggregate law is
exactly the law of per-particle branching, so the engine is a drop-in for an
individual simulation until counts hit the saturation cap.

Counts saturate at ``count_cap`` instead of overflowing; saturation is
recorded on the state and never raises.  The default cap of 1e15 keeps every
intermediate sum exactly representable in int64 (and float64) for desk-scale
support widths.  ``frontier`` mode additionally drops sites more than
``window_width`` behind the running maximum, which bounds memory and work for
deep horizons.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Sequence

import numpy as np

from .offspring import (
    GeneralFinite,
    OffspringSpec,
    ProductForm,
    SpecError,
    is_lattice,
    max_displacement,
    min_displacement,
)

DEFAULT_COUNT_CAP = 10**15
DEFAULT_MULTINOMIAL_THRESHOLD = 10**5


class EmptyPopulation(RuntimeError):
    """Defensive: positions requested from a population with no particles."""


@dataclass
class EngineConfig:
    """Knobs for the aggregate engine.

    ``window_width`` only applies in frontier mode and must be at least four
    step-support widths; ``rng_seed`` is carried for provenance, the engine
    itself always takes an explicit generator.
    """

    mode: str = "exact"
    window_width: int | None = None
    count_cap: int = DEFAULT_COUNT_CAP
    exact_multinomial_threshold: int = DEFAULT_MULTINOMIAL_THRESHOLD
    rng_seed: int | None = None

    def __post_init__(self):
        if self.mode not in ("exact", "frontier"):
            raise ValueError(f"unknown engine mode {self.mode!r}")
        if not (0 < self.count_cap <= 2**63):
            raise ValueError("count_cap must be in (0, 2^63]")
        if self.mode == "frontier" and self.window_width is None:
            raise ValueError("frontier mode needs a window_width")

    def validate_for(self, spec: OffspringSpec) -> None:
        s = int(max(abs(max_displacement(spec)), abs(min_displacement(spec))))
        if self.mode == "frontier" and self.window_width < 4 * s:
            raise ValueError(
                f"window_width {self.window_width} below 4*support bound {4 * s}"
            )


def default_window_width(theta: float, step_bound: int) -> int:
    # counts w sites behind the front grow ~ e^{theta*w}; 20/theta puts the
    # dropped mass ~ e^{-20} below the cap-bearing bulk
    return math.ceil(20.0 / theta) + 10 * step_bound


@dataclass
class PopulationState:
    """Site-count occupancy of one walk at a fixed generation.

    ``occ[i]`` is the particle count at site ``origin + i``; the array is
    trimmed so both ends are occupied.  ``saturated`` is a run-level flag
    that sticks once any count has been clipped at the cap.
    """

    generation: int
    origin: int
    occ: np.ndarray
    mode: str = "exact"
    saturated: bool = False
    saturation_events: int = 0
    truncation_events: int = 0

    @property
    def max_pos(self) -> int:
        if self.occ.size == 0:
            raise EmptyPopulation("no occupied sites")
        return self.origin + self.occ.shape[0] - 1

    @property
    def min_pos(self) -> int:
        if self.occ.size == 0:
            raise EmptyPopulation("no occupied sites")
        return self.origin

    def total(self) -> int:
        # exact python-int sum; int64 could wrap when many sites sit at the cap
        return int(sum(int(c) for c in self.occ[self.occ > 0]))

    def occupancy(self) -> dict[int, int]:
        return {
            self.origin + i: int(c) for i, c in enumerate(self.occ) if c > 0
        }


def init(start: int, mode: str = "exact") -> PopulationState:
    """Single particle at ``start``, generation 0."""
    return PopulationState(
        generation=0, origin=int(start), occ=np.array([1], dtype=np.int64), mode=mode
    )


def from_occupancy(
    occupancy: dict[int, int], generation: int = 0, mode: str = "exact"
) -> PopulationState:
    """State with the given site -> count table."""
    if not occupancy or any(c < 1 for c in occupancy.values()):
        raise ValueError("occupancy needs at least one site, all counts >= 1")
    lo, hi = min(occupancy), max(occupancy)
    occ = np.zeros(hi - lo + 1, dtype=np.int64)
    for site, count in occupancy.items():
        occ[site - lo] = count
    return PopulationState(generation=generation, origin=lo, occ=occ, mode=mode)


def max_position(state: PopulationState) -> int:
    return state.max_pos


def min_position(state: PopulationState) -> int:
    return state.min_pos


# ---------------------------------------------------------------------------
# compiled law tables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _Compiled:
    kind: str                       # "product" | "general"
    d_min: int
    d_max: int
    count_values: np.ndarray | None
    count_probs: np.ndarray | None
    step_disp: np.ndarray | None
    step_probs: np.ndarray | None
    outcome_probs: np.ndarray | None
    outcome_atoms: tuple | None     # per outcome: tuple of (displacement, multiplicity)
    max_children: int


@lru_cache(maxsize=64)
def _compile(spec: OffspringSpec) -> _Compiled:
    if not is_lattice(spec):
        raise SpecError("lattice engine accepts integer displacements only")
    d_min = int(min_displacement(spec))
    d_max = int(max_displacement(spec))
    if isinstance(spec, ProductForm):
        return _Compiled(
            kind="product",
            d_min=d_min,
            d_max=d_max,
            count_values=np.array([n for n, _ in spec.count.atoms], dtype=np.int64),
            count_probs=np.array([p for _, p in spec.count.atoms]),
            step_disp=np.array([d for d, _ in spec.step.atoms], dtype=np.int64),
            step_probs=np.array([p for _, p in spec.step.atoms]),
            outcome_probs=None,
            outcome_atoms=None,
            max_children=spec.count.max_count,
        )
    atoms = tuple(
        tuple((int(d), int(m)) for d, m in outcome) for outcome, _ in spec.outcomes
    )
    return _Compiled(
        kind="general",
        d_min=d_min,
        d_max=d_max,
        count_values=None,
        count_probs=None,
        step_disp=None,
        step_probs=None,
        outcome_probs=np.array([p for _, p in spec.outcomes]),
        outcome_atoms=atoms,
        max_children=spec.max_count,
    )


def _check_cap_headroom(compiled: _Compiled, cap: int) -> None:
    # pooled child totals and scatter sums must stay inside int64
    span = compiled.d_max - compiled.d_min + 1
    if compiled.max_children * cap >= 2**62 or span * compiled.max_children * cap >= 2**63:
        raise ValueError(
            f"count_cap {cap} too large for a law with up to "
            f"{compiled.max_children} children over span {span}"
        )


# ---------------------------------------------------------------------------
# sampling primitives
# ---------------------------------------------------------------------------

def multinomial_counts(
    rng: np.random.Generator,
    trials: int,
    probabilities: Sequence[float],
    threshold: int = DEFAULT_MULTINOMIAL_THRESHOLD,
) -> np.ndarray:
    """Exact multinomial draw; outputs always sum to ``trials``.

    Small draws go through the library multinomial; very large ones through
    sequential conditional binomials with renormalized odds, which stays
    numerically robust for counts up to the saturation cap.
    """
    p = np.asarray(probabilities, dtype=float)
    if abs(p.sum() - 1.0) > 1e-12:
        raise ValueError(f"probabilities sum to {p.sum()!r}")
    if trials == 0:
        return np.zeros(p.shape[0], dtype=np.int64)
    if trials <= threshold:
        return rng.multinomial(int(trials), p).astype(np.int64)
    out = np.zeros(p.shape[0], dtype=np.int64)
    remaining = int(trials)
    prob_left = 1.0
    for i in range(p.shape[0] - 1):
        if remaining == 0:
            break
        q = min(max(p[i] / prob_left, 0.0), 1.0)
        draw = int(rng.binomial(remaining, q))
        out[i] = draw
        remaining -= draw
        prob_left -= p[i]
    out[-1] += remaining
    return out


# ---------------------------------------------------------------------------
# one generation
# ---------------------------------------------------------------------------

def step(
    state: PopulationState,
    spec: OffspringSpec,
    config: EngineConfig,
    rng: np.random.Generator,
) -> PopulationState:
    """Advance every particle by one reproduction round.

    Per site with count c: parents split multinomially over count values,
    pooled children split multinomially over displacements, children land at
    site + displacement.  Equivalent in law to c independent per-particle
    draws.  Counts clip at the cap (recorded, non-fatal).
    """
    if state.occ.size == 0:
        raise EmptyPopulation("cannot step an empty population")
    compiled = _compile(spec)
    cap = config.count_cap
    _check_cap_headroom(compiled, cap)

    occ = state.occ
    n_sites = occ.shape[0]
    span = compiled.d_max - compiled.d_min
    new = np.zeros(n_sites + span, dtype=np.int64)

    if compiled.kind == "product":
        parents = rng.multinomial(occ, compiled.count_probs)
        totals = parents @ compiled.count_values
        kids = rng.multinomial(totals, compiled.step_probs)
        for j in range(compiled.step_disp.shape[0]):
            off = int(compiled.step_disp[j]) - compiled.d_min
            new[off : off + n_sites] += kids[:, j]
    else:
        draws = rng.multinomial(occ, compiled.outcome_probs)
        for o, atoms in enumerate(compiled.outcome_atoms):
            col = draws[:, o]
            for d, m in atoms:
                off = d - compiled.d_min
                new[off : off + n_sites] += m * col

    events = state.saturation_events
    saturated = state.saturated
    over = new > cap
    if over.any():
        events += int(over.sum())
        saturated = True
        np.minimum(new, cap, out=new)

    nz = np.nonzero(new)[0]
    occ_new = new[nz[0] : nz[-1] + 1].copy()
    return PopulationState(
        generation=state.generation + 1,
        origin=state.origin + compiled.d_min + int(nz[0]),
        occ=occ_new,
        mode=state.mode,
        saturated=saturated,
        saturation_events=events,
        truncation_events=state.truncation_events,
    )


def truncate_frontier(state: PopulationState, config: EngineConfig) -> PopulationState:
    """Drop sites more than ``window_width`` behind the maximum (frontier mode)."""
    if config.mode != "frontier":
        raise ValueError("truncate_frontier requires frontier mode")
    cutoff = state.max_pos - config.window_width
    if state.min_pos >= cutoff:
        return state
    lo = cutoff - state.origin
    occ = state.occ[lo:]
    nz = np.nonzero(occ)[0]
    occ = occ[nz[0] :].copy()
    np.minimum(occ, config.count_cap, out=occ)
    return replace(
        state,
        origin=cutoff + int(nz[0]),
        occ=occ,
        truncation_events=state.truncation_events + 1,
    )


def advance(
    state: PopulationState,
    spec: OffspringSpec,
    config: EngineConfig,
    rng: np.random.Generator,
) -> PopulationState:
    """One generation plus the frontier cut when that mode is active."""
    nxt = step(state, spec, config, rng)
    if config.mode == "frontier":
        nxt = truncate_frontier(nxt, config)
    return nxt
