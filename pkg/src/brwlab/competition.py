"""Two-color first-visit competition between independent walks.

Two populations advance in lockstep inside one arena; every site keeps the
color of the cloud that occupied it first.  Ties within a generation resolve
by a fixed rule or a dedicated fair coin.  The color field is append-only:
once painted, a site never changes color or first-visit time.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np

from .engine import EngineConfig, PopulationState, advance, init
from .offspring import OffspringSpec

RED, BLUE = 1, 2
TIE_RULES = ("red_first", "blue_first", "fair_coin")


class WindowOutOfRange(ValueError):
    """A census window reaches outside the simulated arena."""


class ArenaRngs(NamedTuple):
    """Independent streams per color plus one for tie coins."""

    red: np.random.Generator
    blue: np.random.Generator
    tie: np.random.Generator


def arena_rngs(master_seed: int, replica_index: int) -> ArenaRngs:
    return ArenaRngs(
        red=np.random.default_rng(np.random.SeedSequence((master_seed, replica_index, 0))),
        blue=np.random.default_rng(np.random.SeedSequence((master_seed, replica_index, 1))),
        tie=np.random.default_rng(np.random.SeedSequence((master_seed, replica_index, 2))),
    )


class ColorField:
    """First-visit colors over a growable site window.

    Backed by flat arrays (color code and first-visit generation per site);
    behaves like an append-only map site -> (color, time).
    """

    def __init__(self):
        self._origin = 0
        self._colors = np.zeros(0, dtype=np.int8)
        self._times = np.zeros(0, dtype=np.int64)
        self.red_sites = 0
        self.blue_sites = 0

    def _ensure(self, lo: int, hi: int) -> None:
        if self._colors.size == 0:
            pad = max(64, hi - lo + 1)
            self._origin = lo - pad // 2
            self._colors = np.zeros(hi - lo + 1 + pad, dtype=np.int8)
            self._times = np.zeros_like(self._colors, dtype=np.int64)
            return
        cur_hi = self._origin + self._colors.size - 1
        grow_lo = max(0, self._origin - lo)
        grow_hi = max(0, hi - cur_hi)
        if grow_lo or grow_hi:
            # geometric headroom keeps amortized growth cheap
            grow_lo = max(grow_lo, self._colors.size // 2 if grow_lo else 0)
            grow_hi = max(grow_hi, self._colors.size // 2 if grow_hi else 0)
            self._colors = np.concatenate(
                [
                    np.zeros(grow_lo, dtype=np.int8),
                    self._colors,
                    np.zeros(grow_hi, dtype=np.int8),
                ]
            )
            self._times = np.concatenate(
                [
                    np.zeros(grow_lo, dtype=np.int64),
                    self._times,
                    np.zeros(grow_hi, dtype=np.int64),
                ]
            )
            self._origin -= grow_lo

    def paint(self, sites: np.ndarray, color: int, time: int) -> int:
        """Color the uncolored subset of ``sites``; returns how many were new."""
        if sites.size == 0:
            return 0
        self._ensure(int(sites.min()), int(sites.max()))
        idx = sites - self._origin
        fresh = idx[self._colors[idx] == 0]
        self._colors[fresh] = color
        self._times[fresh] = time
        n = int(fresh.size)
        if color == RED:
            self.red_sites += n
        else:
            self.blue_sites += n
        return n

    def uncolored_mask(self, sites: np.ndarray) -> np.ndarray:
        if sites.size == 0:
            return np.zeros(0, dtype=bool)
        self._ensure(int(sites.min()), int(sites.max()))
        return self._colors[sites - self._origin] == 0

    def color_at(self, site: int) -> str | None:
        i = site - self._origin
        if i < 0 or i >= self._colors.size or self._colors[i] == 0:
            return None
        return "red" if self._colors[i] == RED else "blue"

    def time_at(self, site: int) -> int | None:
        i = site - self._origin
        if i < 0 or i >= self._colors.size or self._colors[i] == 0:
            return None
        return int(self._times[i])

    def items(self) -> Iterator[tuple[int, tuple[str, int]]]:
        for i in np.nonzero(self._colors)[0]:
            color = "red" if self._colors[i] == RED else "blue"
            yield self._origin + int(i), (color, int(self._times[i]))

    def counts(self) -> tuple[int, int]:
        return self.red_sites, self.blue_sites

    def window_colors(self, lo: int, hi: int) -> np.ndarray:
        """Color codes over [lo, hi]; 0 where uncolored."""
        self._ensure(lo, hi)
        return self._colors[lo - self._origin : hi - self._origin + 1]


@dataclass
class ArenaState:
    """Paired populations plus the first-visit color field."""

    red: PopulationState
    blue: PopulationState
    colors: ColorField
    tie_break: str
    generation: int
    explored_min: int
    explored_max: int
    last_new_red: int = 0
    last_new_blue: int = 0


def arena_init(
    red_start: int,
    blue_start: int,
    tie_break: str = "red_first",
    tie_rng: np.random.Generator | None = None,
    mode: str = "exact",
) -> ArenaState:
    """Both populations at their starts; starting sites colored at time 0."""
    if tie_break not in TIE_RULES:
        raise ValueError(f"unknown tie rule {tie_break!r}")
    colors = ColorField()
    if red_start == blue_start:
        winner = _tie_winner(tie_break, 1, tie_rng)[0]
        colors.paint(np.array([red_start]), int(winner), 0)
    else:
        colors.paint(np.array([red_start]), RED, 0)
        colors.paint(np.array([blue_start]), BLUE, 0)
    return ArenaState(
        red=init(red_start, mode),
        blue=init(blue_start, mode),
        colors=colors,
        tie_break=tie_break,
        generation=0,
        explored_min=min(red_start, blue_start),
        explored_max=max(red_start, blue_start),
    )


def _tie_winner(rule: str, n: int, tie_rng: np.random.Generator | None) -> np.ndarray:
    if rule == "red_first":
        return np.full(n, RED, dtype=np.int8)
    if rule == "blue_first":
        return np.full(n, BLUE, dtype=np.int8)
    if tie_rng is None:
        raise ValueError("fair_coin tie rule needs a tie rng")
    return np.where(tie_rng.random(n) < 0.5, RED, BLUE).astype(np.int8)


def arena_step(
    state: ArenaState,
    red_spec: OffspringSpec,
    blue_spec: OffspringSpec,
    config: EngineConfig,
    rngs: ArenaRngs,
) -> ArenaState:
    """Advance both colors one generation and paint fresh sites.

    The two walks use disjoint streams, so either marginal is unchanged by
    the presence of the other.  Sites reached by both colors for the first
    time in the same generation go to the tie rule (fair coins come from the
    third stream, keeping the color marginals reproducible).
    """
    red = advance(state.red, red_spec, config, rngs.red)
    blue = advance(state.blue, blue_spec, config, rngs.blue)
    t = state.generation + 1

    red_sites = red.origin + np.nonzero(red.occ)[0]
    blue_sites = blue.origin + np.nonzero(blue.occ)[0]
    fresh_red = red_sites[state.colors.uncolored_mask(red_sites)]
    fresh_blue = blue_sites[state.colors.uncolored_mask(blue_sites)]

    contested = np.intersect1d(fresh_red, fresh_blue, assume_unique=True)
    new_red = new_blue = 0
    if contested.size:
        winners = _tie_winner(state.tie_break, contested.size, rngs.tie)
        to_red = contested[winners == RED]
        to_blue = contested[winners == BLUE]
        new_red += state.colors.paint(to_red, RED, t)
        new_blue += state.colors.paint(to_blue, BLUE, t)
        fresh_red = np.setdiff1d(fresh_red, contested, assume_unique=True)
        fresh_blue = np.setdiff1d(fresh_blue, contested, assume_unique=True)
    new_red += state.colors.paint(fresh_red, RED, t)
    new_blue += state.colors.paint(fresh_blue, BLUE, t)

    return ArenaState(
        red=red,
        blue=blue,
        colors=state.colors,
        tie_break=state.tie_break,
        generation=t,
        explored_min=min(state.explored_min, red.min_pos, blue.min_pos),
        explored_max=max(state.explored_max, red.max_pos, blue.max_pos),
        last_new_red=new_red,
        last_new_blue=new_blue,
    )


def frontier_gaps(state: ArenaState) -> tuple[int, int]:
    """(right gap M_blue - M_red, left gap L_red - L_blue), signed."""
    return (
        state.blue.max_pos - state.red.max_pos,
        state.red.min_pos - state.blue.min_pos,
    )


@dataclass(frozen=True)
class HoleCensus:
    """Uncolored-site counts just outside the red front, split by site parity."""

    right_even: int
    right_odd: int
    left_even: int
    left_odd: int


def hole_census(state: ArenaState, window: int) -> HoleCensus:
    """Count uncolored sites in the ``window`` sites beyond each red extreme."""
    if window < 1:
        raise ValueError("window must be >= 1")
    m_r = state.red.max_pos
    l_r = state.red.min_pos

    def tally(lo: int, hi: int) -> tuple[int, int]:
        codes = state.colors.window_colors(lo, hi)
        sites = np.arange(lo, hi + 1)
        holes = sites[codes == 0]
        even = int(np.count_nonzero(holes % 2 == 0))
        return even, int(holes.size - even)

    right = tally(m_r + 1, m_r + window)
    left = tally(l_r - window, l_r - 1)
    return HoleCensus(right[0], right[1], left[0], left[1])


def color_counts(state: ArenaState) -> tuple[int, int]:
    """Total sites first-visited by red and by blue so far."""
    return state.colors.counts()


def window_presence(state: ArenaState, lo: float, hi: float) -> tuple[bool, bool]:
    """Whether each color appears among colored sites of [lo, hi].

    The window must lie inside the explored range; anything beyond it was
    never reachable and its colors are unknown, not absent.
    """
    lo_i, hi_i = int(np.ceil(lo)), int(np.floor(hi))
    if lo_i > hi_i:
        raise WindowOutOfRange(f"window [{lo!r}, {hi!r}] contains no lattice site")
    if lo_i < state.explored_min or hi_i > state.explored_max:
        raise WindowOutOfRange(
            f"window [{lo_i}, {hi_i}] outside explored range "
            f"[{state.explored_min}, {state.explored_max}]"
        )
    codes = state.colors.window_colors(lo_i, hi_i)
    return bool(np.any(codes == RED)), bool(np.any(codes == BLUE))
