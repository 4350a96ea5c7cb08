"""Individual-level branching random walks with full ancestry.

Trees store one flat array of positions and parent indices per generation,
so a descendant scan is a single forward pass.  This module doubles as the
brute-force oracle for the aggregate engine (project a tree to site counts)
and carries the front-democracy statistic: the fraction of individuals of a
fixed generation with a descendant on the running maximum by some horizon.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .offspring import (
    GeneralFinite,
    OffspringSpec,
    ProductForm,
    SpecError,
    is_lattice,
    mean_count,
)

DEFAULT_BUDGET = 10**7


class BudgetExceeded(RuntimeError):
    """Expected or realized population exceeds the configured tree budget."""


@dataclass(frozen=True)
class Individual:
    """One node of a tree; ids pack (generation, index) into 64 bits."""

    generation: int
    index: int
    parent_index: int  # -1 for the root
    position: int

    @property
    def token(self) -> int:
        return (self.generation << 40) | self.index


@dataclass
class Tree:
    """Generations of a BRW, each a flat (positions, parent indices) pair."""

    positions: list[np.ndarray]
    parents: list[np.ndarray]

    @property
    def horizon(self) -> int:
        return len(self.positions) - 1

    def generation_size(self, g: int) -> int:
        return self.positions[g].shape[0]

    def size(self) -> int:
        return sum(p.shape[0] for p in self.positions)

    def max_positions(self) -> np.ndarray:
        return np.array([int(p.max()) for p in self.positions], dtype=np.int64)

    def individual(self, generation: int, index: int) -> Individual:
        return Individual(
            generation=generation,
            index=index,
            parent_index=int(self.parents[generation][index]),
            position=int(self.positions[generation][index]),
        )

    def ancestor_index(self, generation: int, index: int, ancestor_generation: int) -> int:
        """Index of the ancestor at ``ancestor_generation`` (walks parents)."""
        i = index
        for g in range(generation, ancestor_generation, -1):
            i = int(self.parents[g][i])
        return i

    def occupancy(self, generation: int) -> dict[int, int]:
        """Project one generation to site counts (aggregate-engine view)."""
        sites, counts = np.unique(self.positions[generation], return_counts=True)
        return {int(s): int(c) for s, c in zip(sites, counts)}


def _cdf(probs: Sequence[float]) -> np.ndarray:
    c = np.cumsum(np.asarray(probs, dtype=float))
    c[-1] = 1.0
    return c


def grow(
    spec: OffspringSpec,
    horizon: int,
    rng: np.random.Generator,
    max_individuals: int = DEFAULT_BUDGET,
) -> Tree:
    """Grow a full tree to ``horizon`` generations.

    Refuses up front when the expected final generation alone would exceed
    the budget, and aborts mid-growth if the realized population does.
    """
    if not is_lattice(spec):
        raise SpecError("trees are grown on the integer lattice only")
    en = mean_count(spec)
    if horizon * math.log(en) > math.log(max_individuals):
        raise BudgetExceeded(
            f"expected generation size {en}^{horizon} exceeds budget {max_individuals}"
        )

    positions = [np.zeros(1, dtype=np.int64)]
    parents = [np.full(1, -1, dtype=np.int64)]
    total = 1

    if isinstance(spec, ProductForm):
        count_vals = np.array([n for n, _ in spec.count.atoms], dtype=np.int64)
        count_cdf = _cdf([p for _, p in spec.count.atoms])
        step_vals = np.array([d for d, _ in spec.step.atoms], dtype=np.int64)
        step_cdf = _cdf([p for _, p in spec.step.atoms])
        for _ in range(horizon):
            pop = positions[-1]
            n_kids = count_vals[np.searchsorted(count_cdf, rng.random(pop.shape[0]), side="right")]
            parent_idx = np.repeat(np.arange(pop.shape[0], dtype=np.int64), n_kids)
            disp = step_vals[np.searchsorted(step_cdf, rng.random(parent_idx.shape[0]), side="right")]
            positions.append(pop[parent_idx] + disp)
            parents.append(parent_idx)
            total += parent_idx.shape[0]
            if total > max_individuals:
                raise BudgetExceeded(f"tree grew past {max_individuals} individuals")
        return Tree(positions, parents)

    outcome_cdf = _cdf([p for _, p in spec.outcomes])
    atom_lists = [
        np.array([d for d, m in atoms for _ in range(m)], dtype=np.int64)
        for atoms, _ in spec.outcomes
    ]
    sizes = np.array([a.shape[0] for a in atom_lists], dtype=np.int64)
    for _ in range(horizon):
        pop = positions[-1]
        choice = np.searchsorted(outcome_cdf, rng.random(pop.shape[0]), side="right")
        n_kids = sizes[choice]
        parent_idx = np.repeat(np.arange(pop.shape[0], dtype=np.int64), n_kids)
        disp = (
            np.concatenate([atom_lists[c] for c in choice])
            if pop.shape[0]
            else np.zeros(0, dtype=np.int64)
        )
        positions.append(pop[parent_idx] + disp)
        parents.append(parent_idx)
        total += parent_idx.shape[0]
        if total > max_individuals:
            raise BudgetExceeded(f"tree grew past {max_individuals} individuals")
    return Tree(positions, parents)


def democracy_curve(tree: Tree, q: int, horizons: Sequence[int]) -> list[float]:
    """Democracy fractions at several horizons in one forward pass.

    For each generation-q individual u, u scores once some individual at the
    per-generation maximum (any tie) between generations q and the horizon is
    a descendant of u (u itself counts at generation q).
    """
    hs = sorted(set(int(h) for h in horizons))
    if q > hs[0]:
        raise ValueError(f"q={q} exceeds smallest horizon {hs[0]}")
    if hs[-1] > tree.horizon:
        raise ValueError(f"horizon {hs[-1]} beyond grown tree ({tree.horizon})")
    n_q = tree.generation_size(q)
    marked = np.zeros(n_q, dtype=bool)
    labels = np.arange(n_q, dtype=np.int64)
    at_horizon: dict[int, float] = {}
    for t in range(q, hs[-1] + 1):
        if t > q:
            labels = labels[tree.parents[t]]
        pos = tree.positions[t]
        winners = labels[pos == pos.max()]
        marked[winners] = True
        if t in hs:
            at_horizon[t] = float(marked.mean())
    return [at_horizon[int(h)] for h in horizons]


def democracy_stats(tree: Tree, q: int, horizon: int) -> float:
    """Fraction of generation-q individuals with an extremal descendant by ``horizon``."""
    return democracy_curve(tree, q, [horizon])[0]
