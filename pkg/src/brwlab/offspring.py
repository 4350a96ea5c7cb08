"""Finite offspring point processes and their log-Laplace calculus.

A reproduction event is a random multiset of integer (or, after projection,
real) displacements.  Two representations are supported:

* ``ProductForm`` -- an independent child count times i.i.d. displacements,
  the workhorse for lattice simulations;
* ``GeneralFinite`` -- an explicit finite list of outcome multisets, general
  enough to hold projections of higher-dimensional laws.

The calculus functions (``kappa``, ``kappa_prime``, ``kappa_double_prime``)
evaluate the log-Laplace transform of the offspring cloud and its tilted
mean/variance exactly over the finite support.  All evaluations run through
log-sum-exp so that tilt parameters of order +-20 stay finite.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

PROB_TOL = 1e-12


class SpecError(ValueError):
    """An offspring law failed structural validation."""


def _validated_probs(pairs, what: str):
    if not pairs:
        raise SpecError(f"{what}: needs at least one atom")
    total = math.fsum(p for _, p in pairs)
    if abs(total - 1.0) > PROB_TOL:
        raise SpecError(f"{what}: probabilities sum to {total!r}, not 1")
    for v, p in pairs:
        if not (0.0 < p <= 1.0):
            raise SpecError(f"{what}: probability {p!r} for atom {v!r} out of (0,1]")


@dataclass(frozen=True)
class StepLaw:
    """Displacement law of a single child, finitely supported on the lattice.

    ``atoms`` is a tuple of (displacement, probability) pairs, kept sorted by
    displacement with duplicates merged.  ``support_bound`` is the smallest M
    with every |displacement| <= M.
    """

    atoms: tuple[tuple[int, float], ...]

    def __post_init__(self):
        merged: dict[int, float] = {}
        for d, p in self.atoms:
            if d != int(d):
                raise SpecError(f"step displacement {d!r} is not an integer")
            merged[int(d)] = merged.get(int(d), 0.0) + float(p)
        canon = tuple(sorted(merged.items()))
        _validated_probs(canon, "step law")
        object.__setattr__(self, "atoms", canon)

    @classmethod
    def uniform(cls, displacements: Iterable[int]) -> "StepLaw":
        ds = list(displacements)
        return cls(tuple((d, 1.0 / len(ds)) for d in ds))

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, float]]) -> "StepLaw":
        return cls(tuple(pairs))

    @property
    def support_bound(self) -> int:
        return max(abs(d) for d, _ in self.atoms)

    @property
    def max_displacement(self) -> int:
        return self.atoms[-1][0]

    @property
    def min_displacement(self) -> int:
        return self.atoms[0][0]

    @property
    def symmetric(self) -> bool:
        table = dict(self.atoms)
        return all(abs(table.get(-d, 0.0) - p) <= PROB_TOL for d, p in self.atoms)

    @property
    def mean(self) -> float:
        return math.fsum(d * p for d, p in self.atoms)

    def phi(self, theta: float) -> float:
        """log E[e^{theta * step}], evaluated by log-sum-exp."""
        return _lse([(d, p) for d, p in self.atoms], theta)

    def phi_prime(self, theta: float) -> float:
        return _tilted_mean([(d, p) for d, p in self.atoms], theta)

    def phi_double_prime(self, theta: float) -> float:
        return _tilted_var([(d, p) for d, p in self.atoms], theta)


@dataclass(frozen=True)
class CountLaw:
    """Law of the number of children; support in {1, 2, ...} (no extinction)."""

    atoms: tuple[tuple[int, float], ...]

    def __post_init__(self):
        merged: dict[int, float] = {}
        for n, p in self.atoms:
            if n != int(n) or n < 1:
                raise SpecError(f"count atom {n!r} is not an integer >= 1")
            merged[int(n)] = merged.get(int(n), 0.0) + float(p)
        canon = tuple(sorted(merged.items()))
        _validated_probs(canon, "count law")
        object.__setattr__(self, "atoms", canon)

    @classmethod
    def fixed(cls, n: int) -> "CountLaw":
        return cls(((n, 1.0),))

    @property
    def mean(self) -> float:
        return math.fsum(n * p for n, p in self.atoms)

    @property
    def max_count(self) -> int:
        return self.atoms[-1][0]

    @property
    def degenerate_at_one(self) -> bool:
        return self.atoms == ((1, 1.0),)


@dataclass(frozen=True)
class ProductForm:
    """Offspring law: draw N from ``count``, then N i.i.d. draws from ``step``."""

    count: CountLaw
    step: StepLaw


@dataclass(frozen=True)
class GeneralFinite:
    """Offspring law given by finitely many outcome multisets.

    Each outcome is a tuple of (displacement, multiplicity) pairs sorted by
    displacement; displacements may be real (projections feed the calibration
    layer only).  Outcomes are canonicalized and deduplicated so equality and
    hashing are well defined.
    """

    outcomes: tuple[tuple[tuple[tuple[float, int], ...], float], ...]

    def __post_init__(self):
        canon: dict[tuple, float] = {}
        for atoms, p in self.outcomes:
            merged: dict[float, int] = {}
            for d, m in atoms:
                if m != int(m) or m < 1:
                    raise SpecError(f"outcome multiplicity {m!r} invalid")
                key = float(d)
                merged[key] = merged.get(key, 0) + int(m)
            if not merged:
                raise SpecError("outcome multiset is empty (extinction forbidden)")
            k = tuple(sorted(merged.items()))
            canon[k] = canon.get(k, 0.0) + float(p)
        pairs = tuple(sorted(canon.items()))
        _validated_probs(pairs, "outcome law")
        object.__setattr__(self, "outcomes", pairs)

    @classmethod
    def from_outcomes(
        cls, outcomes: Iterable[tuple[Mapping[float, int] | Sequence[float], float]]
    ) -> "GeneralFinite":
        """Build from (multiset, probability) pairs.

        A multiset may be a mapping displacement -> multiplicity, or a plain
        sequence of displacements with repeats.
        """
        rows = []
        for ms, p in outcomes:
            if isinstance(ms, Mapping):
                atoms = tuple((d, m) for d, m in ms.items())
            else:
                counted: dict[float, int] = {}
                for d in ms:
                    counted[d] = counted.get(d, 0) + 1
                atoms = tuple(counted.items())
            rows.append((atoms, p))
        return cls(tuple(rows))

    def intensity(self) -> dict[float, float]:
        """Expected number of children per displacement value."""
        mu: dict[float, float] = {}
        for atoms, p in self.outcomes:
            for d, m in atoms:
                mu[d] = mu.get(d, 0.0) + p * m
        return dict(sorted(mu.items()))

    @property
    def mean_count(self) -> float:
        return math.fsum(p * sum(m for _, m in atoms) for atoms, p in self.outcomes)

    @property
    def max_count(self) -> int:
        return max(sum(m for _, m in atoms) for atoms, _ in self.outcomes)

    @property
    def min_count(self) -> int:
        return min(sum(m for _, m in atoms) for atoms, _ in self.outcomes)


OffspringSpec = Union[ProductForm, GeneralFinite]


@dataclass(frozen=True)
class PointSample:
    """One realized offspring cloud: displacement -> multiplicity."""

    multiplicities: tuple[tuple[float, int], ...]

    def __post_init__(self):
        if self.total < 1:
            raise SpecError("point sample must contain at least one child")

    @classmethod
    def from_mapping(cls, m: Mapping[float, int]) -> "PointSample":
        return cls(tuple(sorted((d, int(k)) for d, k in m.items() if k)))

    @property
    def total(self) -> int:
        return sum(m for _, m in self.multiplicities)

    def as_dict(self) -> dict[float, int]:
        return dict(self.multiplicities)


# ---------------------------------------------------------------------------
# log-Laplace calculus
# ---------------------------------------------------------------------------

def _lse(weighted: list[tuple[float, float]], theta: float) -> float:
    # log sum_i w_i e^{theta d_i} for positive weights w_i
    terms = [math.log(w) + theta * d for d, w in weighted]
    m = max(terms)
    return m + math.log(math.fsum(math.exp(t - m) for t in terms))

def _tilted_weights(weighted: list[tuple[float, float]], theta: float):
    terms = [math.log(w) + theta * d for d, w in weighted]
    m = max(terms)
    w = [math.exp(t - m) for t in terms]
    z = math.fsum(w)
    return [(d, wi / z) for (d, _), wi in zip(weighted, w)]

def _tilted_mean(weighted, theta: float) -> float:
    return math.fsum(d * w for d, w in _tilted_weights(weighted, theta))

def _tilted_var(weighted, theta: float) -> float:
    tw = _tilted_weights(weighted, theta)
    mu = math.fsum(d * w for d, w in tw)
    return math.fsum((d - mu) ** 2 * w for d, w in tw)


def _intensity_pairs(spec: OffspringSpec) -> list[tuple[float, float]]:
    if isinstance(spec, ProductForm):
        en = spec.count.mean
        return [(d, en * p) for d, p in spec.step.atoms]
    return list(spec.intensity().items())


def kappa(spec: OffspringSpec, theta: float) -> float:
    """Log-Laplace transform of the offspring cloud at tilt ``theta``.

    For a product-form law this is log E[N] + log E[e^{theta*step}]; in
    general it is the log of the tilted total intensity.  Finite support
    makes the value finite for every real theta.
    """
    if isinstance(spec, ProductForm):
        return math.log(spec.count.mean) + spec.step.phi(theta)
    return _lse(_intensity_pairs(spec), theta)


def kappa_prime(spec: OffspringSpec, theta: float) -> float:
    """Tilted mean displacement (first derivative of ``kappa``)."""
    return _tilted_mean(_intensity_pairs(spec), theta)


def kappa_double_prime(spec: OffspringSpec, theta: float) -> float:
    """Tilted displacement variance (second derivative of ``kappa``); >= 0."""
    return _tilted_var(_intensity_pairs(spec), theta)


def max_displacement(spec: OffspringSpec) -> float:
    if isinstance(spec, ProductForm):
        return spec.step.max_displacement
    return max(d for d, _ in _intensity_pairs(spec))


def min_displacement(spec: OffspringSpec) -> float:
    if isinstance(spec, ProductForm):
        return spec.step.min_displacement
    return min(d for d, _ in _intensity_pairs(spec))


def support_bound(spec: OffspringSpec) -> float:
    return max(abs(max_displacement(spec)), abs(min_displacement(spec)))


def mean_count(spec: OffspringSpec) -> float:
    return spec.count.mean if isinstance(spec, ProductForm) else spec.mean_count


def is_lattice(spec: OffspringSpec) -> bool:
    """True iff every displacement is an integer (engine-compatible)."""
    if isinstance(spec, ProductForm):
        return True
    return all(float(d).is_integer() for d, _ in _intensity_pairs(spec))


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def _draw(values, cdf, rng: np.random.Generator):
    u = rng.random()
    for v, c in zip(values, cdf):
        if u < c:
            return v
    return values[-1]


def sample(spec: OffspringSpec, rng: np.random.Generator) -> PointSample:
    """Draw one offspring cloud.

    Product form: one count draw, then that many independent step draws.
    General form: one outcome multiset draw.
    """
    if isinstance(spec, ProductForm):
        cvals = [n for n, _ in spec.count.atoms]
        ccdf = np.cumsum([p for _, p in spec.count.atoms]).tolist()
        n = _draw(cvals, ccdf, rng)
        svals = [d for d, _ in spec.step.atoms]
        scdf = np.cumsum([p for _, p in spec.step.atoms]).tolist()
        out: dict[float, int] = {}
        for _ in range(n):
            d = _draw(svals, scdf, rng)
            out[d] = out.get(d, 0) + 1
        return PointSample.from_mapping(out)
    ocdf = np.cumsum([p for _, p in spec.outcomes]).tolist()
    atoms = _draw([a for a, _ in spec.outcomes], ocdf, rng)
    return PointSample.from_mapping(dict(atoms))


# ---------------------------------------------------------------------------
# projection of d-dimensional laws
# ---------------------------------------------------------------------------

def project(
    outcomes: Iterable[tuple[Sequence[Sequence[int]], float]],
    direction: Sequence[float],
) -> GeneralFinite:
    """Project a d-dimensional finite offspring law onto a unit direction.

    ``outcomes`` lists (child position vectors, probability); repeats encode
    multiplicity.  Every child vector is replaced by its inner product with
    ``direction``; equal projections within an outcome merge.  The result
    carries real-valued displacements and feeds the calibration layer only.
    """
    e = np.asarray(direction, dtype=float)
    norm = float(np.sqrt(np.sum(e * e)))
    if abs(norm - 1.0) > PROB_TOL:
        raise SpecError(f"direction has norm {norm!r}, expected a unit vector")
    rows = []
    for vectors, p in outcomes:
        ms: dict[float, int] = {}
        for v in vectors:
            # merge on a fixed decimal grid so float equality is deterministic
            proj = round(float(np.dot(np.asarray(v, dtype=float), e)), 12)
            ms[proj] = ms.get(proj, 0) + 1
        rows.append((ms, p))
    return GeneralFinite.from_outcomes(rows)


# ---------------------------------------------------------------------------
# serialization (canonical, byte-stable)
# ---------------------------------------------------------------------------

def to_document(spec: OffspringSpec) -> str:
    """Canonical JSON text; identical specs serialize to identical bytes."""
    if isinstance(spec, ProductForm):
        obj = {
            "form": "product",
            "count": [[n, p] for n, p in spec.count.atoms],
            "step": [[d, p] for d, p in spec.step.atoms],
        }
    else:
        obj = {
            "form": "general",
            "outcomes": [
                [{_dkey(d): m for d, m in atoms}, p] for atoms, p in spec.outcomes
            ],
        }
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _dkey(d: float) -> str:
    return str(int(d)) if float(d).is_integer() else repr(float(d))


def from_document(text: str) -> OffspringSpec:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"unparseable spec document: {exc}") from exc
    return from_obj(obj)


def from_obj(obj: Mapping) -> OffspringSpec:
    form = obj.get("form")
    if form == "product":
        count = CountLaw(tuple((int(n), float(p)) for n, p in obj["count"]))
        step = StepLaw(tuple((int(d), float(p)) for d, p in obj["step"]))
        return ProductForm(count, step)
    if form == "general":
        rows = []
        for ms, p in obj["outcomes"]:
            rows.append(({float(d): int(m) for d, m in ms.items()}, float(p)))
        return GeneralFinite.from_outcomes(rows)
    raise SpecError(f"unknown spec form {form!r}")


def to_obj(spec: OffspringSpec) -> dict:
    return json.loads(to_document(spec))


def load_spec(path) -> OffspringSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return from_document(fh.read())


def dump_spec(spec: OffspringSpec, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(to_document(spec))
