"""Tangent-point calibration for branching random walk offspring laws.

The speed of the right-most particle of a supercritical BRW is kappa'(theta*)
where theta* > 0 solves the tangent condition

    theta * kappa'(theta) = kappa(theta),

i.e. the tangent to kappa through the origin.  This module solves that
condition, screens laws for the standing assumptions (survival and
non-triviality; existence of the tangent point; tilted moment bounds),
derives the second-order centering and fluctuation constants, and builds
matched-speed law pairs whose tangent points are deliberately far apart.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

from .offspring import (
    CountLaw,
    GeneralFinite,
    OffspringSpec,
    ProductForm,
    SpecError,
    StepLaw,
    kappa,
    kappa_double_prime,
    kappa_prime,
    max_displacement,
    mean_count,
)

THETA_BRACKET_CAP = 1e3      # tangent points of bounded laws sit far below this
MAX_SOLVER_ITER = 200
DEFAULT_TOL = 1e-12


class NoTangentPoint(ValueError):
    """The tangent condition has no solution on (0, inf)."""


class NonConvergence(RuntimeError):
    """Root refinement failed to reach the requested residual."""


class Infeasible(ValueError):
    """A construction target is outside the feasible range."""


@dataclass(frozen=True)
class CalibrationResult:
    """Tangent point of a law together with the calculus values there."""

    theta_o: float
    kappa_at: float
    kappa_prime_at: float
    kappa_double_prime_at: float
    residual: float

    @property
    def speed(self) -> float:
        return self.kappa_prime_at


class ExistenceCheck(NamedTuple):
    exists: bool
    limit: float


def theta_exists(spec: OffspringSpec) -> ExistenceCheck:
    """Decide whether the tangent condition is solvable.

    The defect theta*kappa'(theta) - kappa(theta) increases to
    -log(expected number of children at the maximal displacement), so a
    root exists iff that limit is positive, i.e. iff the returned closed-form
    limit is negative.
    """
    s_max = max_displacement(spec)
    if isinstance(spec, ProductForm):
        top_mass = spec.count.mean * dict(spec.step.atoms)[s_max]
    else:
        top_mass = spec.intensity()[s_max]
    limit = math.log(top_mass)
    return ExistenceCheck(limit < 0.0, limit)


def _tangent_defect(spec: OffspringSpec, theta: float) -> float:
    return theta * kappa_prime(spec, theta) - kappa(spec, theta)


def solve_theta(spec: OffspringSpec, tol: float = DEFAULT_TOL) -> CalibrationResult:
    """Solve theta*kappa'(theta) = kappa(theta) on (0, inf).

    Bracketing bisection (upper bracket grown geometrically from 1) down to
    width 1e-6, then guarded Newton steps using h'(theta) = theta*kappa''.
    """
    check = theta_exists(spec)
    if not check.exists:
        raise NoTangentPoint(
            f"no tangent point: closed-form defect limit {-check.limit!r} <= 0"
        )
    if kappa(spec, 0.0) <= 0.0:
        raise NoTangentPoint("law is not supercritical: kappa(0) <= 0")

    evals = 0

    def h(th: float) -> float:
        nonlocal evals
        evals += 1
        return _tangent_defect(spec, th)

    lo, hi = 0.0, 1.0
    while h(hi) <= 0.0:
        lo, hi = hi, hi * 2.0
        if hi > THETA_BRACKET_CAP:
            raise NoTangentPoint(
                f"tangent defect still negative at theta={lo!r}; "
                f"closed-form limit {-check.limit!r} is too close to zero"
            )
    while hi - lo > 1e-6:
        mid = 0.5 * (lo + hi)
        if h(mid) > 0.0:
            hi = mid
        else:
            lo = mid
        if evals > MAX_SOLVER_ITER:
            raise NonConvergence(f"no bracket of width 1e-6 after {evals} evaluations")

    theta = 0.5 * (lo + hi)
    for _ in range(8):
        resid = _tangent_defect(spec, theta)
        if abs(resid) <= tol:
            break
        slope = theta * kappa_double_prime(spec, theta)
        step = resid / slope
        candidate = theta - step
        if not (lo < candidate < hi):
            candidate = 0.5 * (lo + hi)
        if resid > 0.0:
            hi = min(hi, theta)
        else:
            lo = max(lo, theta)
        theta = candidate

    resid = _tangent_defect(spec, theta)
    if abs(resid) > tol:
        raise NonConvergence(f"residual {resid!r} above tolerance {tol!r}")
    return CalibrationResult(
        theta_o=theta,
        kappa_at=kappa(spec, theta),
        kappa_prime_at=kappa_prime(spec, theta),
        kappa_double_prime_at=kappa_double_prime(spec, theta),
        residual=abs(resid),
    )


def centering(calib: CalibrationResult, n: int) -> float:
    """Second-order centering of the maximum at generation ``n`` >= 1."""
    if n < 1:
        raise ValueError("centering is defined for generations n >= 1")
    return n * calib.kappa_prime_at - 1.5 / calib.theta_o * math.log(n)


def fluct_bounds(calib: CalibrationResult) -> tuple[float, float]:
    """(liminf, limsup) constants of (M_n - speed*n)/log n."""
    return (-1.5 / calib.theta_o, -0.5 / calib.theta_o)


def match_speed(step: StepLaw, x: float, tol: float = DEFAULT_TOL) -> tuple[float, float]:
    """Tilt a step law to speed ``x``: solve phi'(theta) = x.

    Returns (theta, log count mean), the count mean being the one that makes
    theta the tangent point of the resulting product-form law.  Feasible for
    mean(step) < x < max displacement (the supremum is not attained).
    """
    s_max = step.max_displacement
    if not (step.mean < x < s_max):
        raise Infeasible(
            f"target speed {x!r} outside ({step.mean!r}, {s_max!r}) for this step law"
        )
    lo, hi = 0.0, 1.0
    while step.phi_prime(hi) <= x:
        lo, hi = hi, hi * 2.0
        if hi > THETA_BRACKET_CAP:
            raise Infeasible(f"speed {x!r} unreachable below theta={THETA_BRACKET_CAP}")
    for _ in range(300):
        mid = 0.5 * (lo + hi)
        if step.phi_prime(mid) > x:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-15 * max(1.0, hi):
            break
    theta = 0.5 * (lo + hi)
    if abs(step.phi_prime(theta) - x) > max(tol, 1e-11):
        raise NonConvergence(f"phi'({theta!r}) missed target speed {x!r}")
    return theta, theta * x - step.phi(theta)


def make_count_law(target_mean: float, min_count: int = 1) -> CountLaw:
    """Bounded count law with the exact given mean.

    Two-point law on {floor(m), ceil(m)}, degenerate for integer m.  Only
    the mean is pinned down by the theory; the two-point choice is the
    smallest-support realization.
    """
    if min_count < 1:
        raise Infeasible("min_count must be >= 1")
    if target_mean < min_count:
        raise Infeasible(f"target mean {target_mean!r} below minimum count {min_count}")
    lo = math.floor(target_mean)
    if lo == target_mean:
        return CountLaw.fixed(int(target_mean))
    p_hi = target_mean - lo  # exact: lo <= m < lo+1 makes the subtraction lossless
    return CountLaw(((lo, 1.0 - p_hi), (lo + 1, p_hi)))


@dataclass(frozen=True)
class NoncoexistencePair:
    """Two laws with equal speed but well-separated tangent points.

    The separation 3*theta_r < theta_b opens a logarithmic gap between the
    two fronts; ``gap_constant_2c`` is twice the gap growth constant.
    """

    red: OffspringSpec
    blue: OffspringSpec
    theta_r: float
    theta_b: float
    speed: float
    gap_constant_2c: float
    red_step_reach: int = 0  # half-width of the red step support

    def __post_init__(self):
        if not 3.0 * self.theta_r < self.theta_b:
            raise Infeasible(
                f"tangent points not separated: 3*{self.theta_r!r} >= {self.theta_b!r}"
            )
        if self.gap_constant_2c <= 0.0:
            raise Infeasible(f"gap constant {self.gap_constant_2c!r} not positive")
        for spec, theta in ((self.red, self.theta_r), (self.blue, self.theta_b)):
            resid = abs(theta * kappa_prime(spec, theta) - kappa(spec, theta))
            if resid > 1e-10:
                raise Infeasible(f"tangent residual {resid!r} at theta={theta!r}")
        mismatch = abs(kappa_prime(self.red, self.theta_r) - kappa_prime(self.blue, self.theta_b))
        if mismatch > 1e-10:
            raise Infeasible(f"speeds differ by {mismatch!r}")


def construct_noncoexistence_pair(
    blue_count_mean: float,
    max_reach: int = 10_000,
    tol: float = DEFAULT_TOL,
) -> NoncoexistencePair:
    """Build the matched-speed pair with a second-order gap.

    Blue steps are uniform on {-2,-1,1,2} with count mean in (2,4), which
    guarantees a tangent point theta_b.  Red steps are uniform on
    {-M,-1,1,M} with M the smallest reach making phi_r'(theta_b/3) exceed
    the blue speed; tilting red to the blue speed then lands theta_r below
    theta_b/3, and the red count mean closes red's tangent condition.
    """
    if not (2.0 < blue_count_mean < 4.0):
        raise Infeasible(f"blue count mean {blue_count_mean!r} outside (2, 4)")

    blue_step = StepLaw.uniform([-2, -1, 1, 2])
    blue = ProductForm(make_count_law(blue_count_mean, 2), blue_step)
    calib_b = solve_theta(blue, tol)
    theta_b = calib_b.theta_o
    x = calib_b.kappa_prime_at

    reach = None
    for m in range(2, max_reach + 1):
        red_step = StepLaw.uniform([-m, -1, 1, m])
        if red_step.phi_prime(theta_b / 3.0) > x:
            reach = m
            break
    if reach is None:
        raise Infeasible(
            f"no red reach <= {max_reach} gives phi_r'(theta_b/3) > {x!r}; "
            "blue speed too high for the scanned family"
        )

    red_step = StepLaw.uniform([-reach, -1, 1, reach])
    theta_r, log_mean_r = match_speed(red_step, x, tol)
    red = ProductForm(make_count_law(math.exp(log_mean_r), 1), red_step)

    return NoncoexistencePair(
        red=red,
        blue=blue,
        theta_r=theta_r,
        theta_b=theta_b,
        speed=x,
        gap_constant_2c=0.5 / theta_r - 1.5 / theta_b,
        red_step_reach=reach,
    )


@dataclass(frozen=True)
class AssumptionReport:
    """Outcome of screening a law against the standing assumptions."""

    a1_ok: bool
    a2_ok: bool
    a3_ok: bool
    diagnostics: dict = field(default_factory=dict)
    w_moment_note: str = ""


def _concentrated(spec: OffspringSpec) -> bool:
    # all children at one fixed displacement with probability 1
    if isinstance(spec, ProductForm):
        return len(spec.step.atoms) == 1
    values = {d for atoms, _ in spec.outcomes for d, _ in atoms}
    return len(values) == 1


def _prob_single_child(spec: OffspringSpec) -> float:
    if isinstance(spec, ProductForm):
        return dict(spec.count.atoms).get(1, 0.0)
    return math.fsum(p for atoms, p in spec.outcomes if sum(m for _, m in atoms) == 1)


def check_assumptions(spec: OffspringSpec) -> AssumptionReport:
    """Screen survival/non-triviality, tangent existence, and moment bounds.

    Finite support plus bounded child counts make the tilted overlap sums
    bounded random variables, so the moment condition holds structurally.
    """
    notes: dict[str, str] = {}

    concentrated = _concentrated(spec)
    p1 = _prob_single_child(spec)
    a1 = (not concentrated) and p1 < 1.0
    if concentrated:
        notes["a1"] = "degenerate: all children land at a single displacement"
    elif p1 >= 1.0:
        notes["a1"] = "always exactly one child: the cloud never branches"
    else:
        notes["a1"] = (
            "non-trivial; minimum child count >= 1 so extinction probability is 0; "
            f"P(exactly one child) = {p1!r} < 1"
        )

    a2 = False
    if a1:
        try:
            calib = solve_theta(spec)
            a2 = calib.kappa_prime_at > 0.0
            notes["a2"] = (
                f"tangent point theta = {calib.theta_o!r} with speed "
                f"{calib.kappa_prime_at!r} and residual {calib.residual!r}"
            )
            if not a2:
                notes["a2"] = f"tangent point has non-positive speed {calib.kappa_prime_at!r}"
        except (NoTangentPoint, NonConvergence) as exc:
            notes["a2"] = str(exc)
    else:
        notes["a2"] = "skipped: non-triviality failed"

    note = (
        "bounded support and bounded count => the tilted sums W and W-bar are "
        "bounded, so their log-moment conditions hold"
    )
    notes["a3"] = note
    return AssumptionReport(
        a1_ok=a1, a2_ok=a2, a3_ok=True, diagnostics=notes, w_moment_note=note
    )
