"""Picard-type orbits x_{n+1} in T x_n, their bound ledger, and limit detection.

Indexing is 0-based throughout: ``step_dist[i] = d(x_i, x_{i+1})`` and
``two_step_dist[i] = d(x_i, x_{i+2})``, where ``x_0`` is the starting point.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Optional, Sequence, Union

import numpy as np

from proxima.errors import DomainError, ParamsError, PreconditionError
from proxima.mapping import Instance, image, locate
from proxima.metric import (
    Point,
    PointSet,
    Side,
    distance,
    hausdorff,
    make_point,
    nearest_index,
    pairwise_distances,
    point_to_set_distance,
)
from proxima.params import DerivedConstants
from proxima.settings import IterationSettings

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Selection policies
# ---------------------------------------------------------------------------


class PolicyKind(str, Enum):
    NEAREST = "nearest"
    FIRST_LISTED = "first"
    SEEDED_RANDOM = "random"


@dataclass(frozen=True)
class SelectionPolicy:
    kind: PolicyKind = PolicyKind.NEAREST
    seed: Optional[int] = None

    @classmethod
    def nearest(cls) -> "SelectionPolicy":
        return cls(PolicyKind.NEAREST)

    @classmethod
    def first_listed(cls) -> "SelectionPolicy":
        return cls(PolicyKind.FIRST_LISTED)

    @classmethod
    def seeded_random(cls, seed: int) -> "SelectionPolicy":
        return cls(PolicyKind.SEEDED_RANDOM, seed)

    def __str__(self) -> str:
        if self.kind is PolicyKind.SEEDED_RANDOM:
            return f"random:{self.seed}"
        return self.kind.value


def parse_policy(text: str) -> SelectionPolicy:
    """Parse ``nearest``, ``first`` or ``random[:seed]``."""
    name, _, seed = text.partition(":")
    if name == "nearest":
        return SelectionPolicy.nearest()
    if name == "first":
        return SelectionPolicy.first_listed()
    if name == "random":
        try:
            return SelectionPolicy.seeded_random(int(seed) if seed else 0)
        except ValueError:
            raise ParamsError(f"random policy seed must be an integer, got {seed!r}")
    raise ParamsError(f"Unknown selection policy {text!r}. Use nearest, first or random[:seed]")


class _Selector:
    def __init__(self, policy: SelectionPolicy):
        self.policy = policy
        self._rng = np.random.default_rng(policy.seed) if policy.kind is PolicyKind.SEEDED_RANDOM else None

    def pick(self, x: Point, candidates: PointSet) -> Point:
        if self.policy.kind is PolicyKind.NEAREST:
            return candidates.point(nearest_index(x, candidates))
        if self.policy.kind is PolicyKind.FIRST_LISTED:
            return candidates.point(0)
        return candidates.point(int(self._rng.integers(len(candidates))))


# ---------------------------------------------------------------------------
# Outcomes and traces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FixedPoint:
    z: Point
    kind: str = "FixedPoint"


@dataclass(frozen=True)
class BestProximityPair:
    z_A: Point
    z_B: Point
    kind: str = "BestProximityPair"


@dataclass(frozen=True)
class NotConverged:
    reason: str
    kind: str = "NotConverged"


Outcome = Union[FixedPoint, BestProximityPair, NotConverged]


@dataclass
class IterationTrace:
    points: list[Point]
    sides: list[Side]
    step_dist: list[float]
    two_step_dist: list[float]
    bound_rhs: list[float]
    partial_sums: list[float]
    D: float
    constants: DerivedConstants
    omega: float
    policy: SelectionPolicy = field(default_factory=SelectionPolicy)
    stopped_early: bool = False
    outcome: Optional[Outcome] = None

    @property
    def iterations(self) -> int:
        return len(self.points) - 1


def _bound_rhs(i: int, first_step: float, c: DerivedConstants, omega: float, D: float) -> float:
    """Telescoped envelope for step i: K1^i d_0 + (1 - K1^i)/(1 - K1) K2 omega D."""
    power = c.K1 ** i
    return power * first_step + (1 - power) / (1 - c.K1) * c.K2 * omega * D


def iterate(
    inst: Instance,
    x1: Sequence[float],
    policy: SelectionPolicy = SelectionPolicy(),
    max_iter: int = 10_000,
    tol: float = 1e-6,
    side: Optional[Side] = None,
) -> IterationTrace:
    """Generate the orbit from x1 until the stopping rule fires or max_iter steps.

    Stops once |d(x_n, x_{n+1}) - D| <= tol and d(x_{n-1}, x_{n+1}) <= tol.
    """
    if max_iter < 2:
        raise ParamsError(f"max_iter must be >= 2, got {max_iter}")
    x = make_point(x1)
    side = side or locate(x, inst)
    c, D, omega = inst.constants, inst.D, inst.omega
    selector = _Selector(policy)

    trace = IterationTrace(
        points=[x], sides=[side], step_dist=[], two_step_dist=[], bound_rhs=[],
        partial_sums=[], D=D, constants=c, omega=omega, policy=policy,
    )
    total = 0.0
    for n in range(max_iter):
        nxt = selector.pick(x, image(x, side, inst))
        side = side.opposite()
        step = distance(x, nxt)
        total += step
        trace.points.append(nxt)
        trace.sides.append(side)
        trace.step_dist.append(step)
        trace.partial_sums.append(total)
        trace.bound_rhs.append(_bound_rhs(n, trace.step_dist[0], c, omega, D))
        if n >= 1:
            trace.two_step_dist.append(distance(trace.points[-3], nxt))
            if abs(step - D) <= tol and trace.two_step_dist[-1] <= tol:
                trace.stopped_early = True
                break
        x = nxt
    logger.debug(
        "iterate: %d steps (stopped early: %s), last step %.9g, D %.9g",
        trace.iterations, trace.stopped_early, trace.step_dist[-1], D,
    )
    return trace


# ---------------------------------------------------------------------------
# Bound ledger
# ---------------------------------------------------------------------------


def _slack(value: float, relative: float) -> float:
    return relative * max(1.0, abs(value))


@dataclass
class StepBoundReport:
    lower_ok: list[bool]
    recursive_ok: list[bool]  # index 0 has no predecessor and is always True
    telescoped_ok: list[bool]
    recursive_gap: list[float]  # rhs - step; ~0 where the bound is tight

    @property
    def ok(self) -> bool:
        return all(self.lower_ok) and all(self.recursive_ok) and all(self.telescoped_ok)

    @property
    def passed(self) -> list[bool]:
        return [a and b and c for a, b, c in zip(self.lower_ok, self.recursive_ok, self.telescoped_ok)]


def check_step_bound(
    trace: IterationTrace,
    constants: Optional[DerivedConstants] = None,
    relative_slack: float = 1e-9,
) -> StepBoundReport:
    """D <= d_n <= K1 d_{n-1} + K2 omega D, plus the telescoped form, at every step."""
    if len(trace.points) < 3:
        raise PreconditionError("check_step_bound needs a trace of at least 3 points")
    c = constants or trace.constants
    D, omega, steps = trace.D, trace.omega, trace.step_dist
    report = StepBoundReport([], [], [], [])
    for i, step in enumerate(steps):
        report.lower_ok.append(step >= D - _slack(D, relative_slack))
        if i == 0:
            report.recursive_ok.append(True)
            report.recursive_gap.append(0.0)
        else:
            rhs = c.K1 * steps[i - 1] + c.K2 * omega * D
            report.recursive_ok.append(step <= rhs + _slack(rhs, relative_slack))
            report.recursive_gap.append(rhs - step)
        tele = _bound_rhs(i, steps[0], c, omega, D)
        report.telescoped_ok.append(step <= tele + _slack(tele, relative_slack))
    return report


@dataclass
class SummabilityReport:
    total: float
    bound: float
    bounded: bool
    tail_diameters: list[float]
    cauchy: bool

    @property
    def ok(self) -> bool:
        return self.bounded and self.cauchy


def check_summability(
    trace: IterationTrace,
    constants: Optional[DerivedConstants] = None,
    tol: float = 1e-6,
    relative_slack: float = 1e-9,
) -> SummabilityReport:
    """Partial sums stay below d_0 / (1 - K1) and tail diameters shrink to zero."""
    if trace.D > tol:
        raise PreconditionError(f"summability applies to intersecting sets; D = {trace.D} > tol")
    c = constants or trace.constants
    total = trace.partial_sums[-1] if trace.partial_sums else 0.0
    bound = (trace.step_dist[0] / (1 - c.K1)) if trace.step_dist else 0.0
    bounded = all(s <= bound + _slack(bound, relative_slack) for s in trace.partial_sums)

    pts = np.array(trace.points, dtype=float)
    tails = []
    for n in range(len(pts) - 1):
        tails.append(float(np.max(pairwise_distances(pts[n:n + 1], pts[n + 1:]))))
    monotone = all(b <= a + tol for a, b in zip(tails, tails[1:]))
    cauchy = monotone and (not tails or tails[-1] <= tol)
    return SummabilityReport(total, bound, bounded, tails, cauchy)


@dataclass
class EvenOddReport:
    lower_ok: list[bool]
    odd_step_envelope_ok: list[bool]
    even_step_envelope_ok: list[bool]
    odd_contraction_ok: list[bool]
    odd_envelope_ok: list[bool]
    odd_two_step: list[float]
    even_two_step: list[float]
    odd_ratios: list[float]
    observed_ratio: Optional[float]
    omega_is_star: bool
    limits: dict[str, float]

    @property
    def ok(self) -> bool:
        return (
            all(self.lower_ok)
            and all(self.odd_step_envelope_ok)
            and all(self.even_step_envelope_ok)
            and all(self.odd_contraction_ok)
            and all(self.odd_envelope_ok)
        )


def even_odd_analysis(
    trace: IterationTrace,
    constants: Optional[DerivedConstants] = None,
    relative_slack: float = 1e-9,
) -> EvenOddReport:
    """Subsequence envelopes for the odd/even iterates counted from the start.

    "Odd" two-step distances are d(x_1, x_3), d(x_3, x_5), ... in 1-based terms.
    Each step distance d_i must lie in [D, K1^i d_0 + (1 - K1^i)/(1 - K1) K2 omega D],
    split by the parity of i, and each odd two-step distance is bounded by K1 times
    the preceding even one plus K2 omega D.
    """
    if len(trace.points) < 5:
        raise PreconditionError("even_odd_analysis needs a trace of at least 5 points")
    c = constants or trace.constants
    D, omega, two = trace.D, trace.omega, trace.two_step_dist
    lower_ok = [s >= D - _slack(D, relative_slack) for s in trace.step_dist]
    step_ok = []
    for i, step in enumerate(trace.step_dist):
        rhs = _bound_rhs(i, trace.step_dist[0], c, omega, D)
        step_ok.append(step <= rhs + _slack(rhs, relative_slack))

    odd = two[0::2]
    even = two[1::2]
    contraction_ok = []
    for i in range(2, len(two), 2):
        rhs = c.K1 * two[i - 1] + c.K2 * omega * D
        contraction_ok.append(two[i] <= rhs + _slack(rhs, relative_slack))
    envelope_ok = []
    for k, value in enumerate(odd):
        power = c.K1 ** (2 * k)
        rhs = power * odd[0] + (1 - power) / (1 - c.K1) * c.K2 * omega * D
        envelope_ok.append(value <= rhs + _slack(rhs, relative_slack))

    ratios = [b / a for a, b in zip(odd, odd[1:]) if a > 0 and b > 0]
    observed = float(np.median(ratios)) if ratios else None
    steps = trace.step_dist
    limits = {
        "even_step": steps[-1] if len(steps) % 2 == 0 else steps[-2],
        "odd_step": steps[-1] if len(steps) % 2 == 1 else steps[-2],
        "two_step": two[-1],
    }
    return EvenOddReport(
        lower_ok=lower_ok,
        odd_step_envelope_ok=step_ok[1::2],
        even_step_envelope_ok=step_ok[0::2],
        odd_contraction_ok=contraction_ok,
        odd_envelope_ok=envelope_ok,
        odd_two_step=odd,
        even_two_step=even,
        odd_ratios=ratios,
        observed_ratio=observed,
        omega_is_star=abs(omega - c.omega_star) <= _slack(c.omega_star, relative_slack),
        limits=limits,
    )


@dataclass
class LimsupReport:
    tail_min: float
    tail_max: float
    lower: float
    upper: float

    @property
    def ok(self) -> bool:
        return self.lower <= self.tail_min and self.tail_max <= self.upper


def limsup_envelope(trace: IterationTrace, tol: float = 1e-6) -> LimsupReport:
    """The last half of the step distances lies in [D, omega K2 D / (1 - K1)] up to tol."""
    if not trace.step_dist:
        raise PreconditionError("limsup_envelope needs at least one step")
    c = trace.constants
    tail = trace.step_dist[len(trace.step_dist) // 2:]
    return LimsupReport(
        tail_min=min(tail),
        tail_max=max(tail),
        lower=trace.D - tol,
        upper=trace.omega * c.K2 * trace.D / (1 - c.K1) + tol,
    )


# ---------------------------------------------------------------------------
# Limits
# ---------------------------------------------------------------------------


@dataclass
class MembershipReport:
    passed: bool
    distances: dict[str, float]
    failed: list[str] = field(default_factory=list)


def _image_gap(z: Point, side: Optional[Side], inst: Instance) -> float:
    """d(z, Tz), or infinity when z is not a domain point on that side."""
    try:
        side = side or locate(z, inst)
        return point_to_set_distance(z, image(z, side, inst))
    except DomainError:
        return math.inf


def verify_fixed_point(
    z: Sequence[float], inst: Instance, tol: float = 1e-6, side: Optional[Side] = None
) -> MembershipReport:
    """z is (numerically) in Tz and in both A and B."""
    z = make_point(z)
    distances = {
        "d(z,Tz)": _image_gap(z, side, inst),
        "d(z,A)": point_to_set_distance(z, inst.A),
        "d(z,B)": point_to_set_distance(z, inst.B),
    }
    failed = [name for name, value in distances.items() if value > tol]
    return MembershipReport(not failed, distances, failed)


def _gap_to_image(p: Point, z: Point, side: Side, inst: Instance) -> float:
    try:
        return point_to_set_distance(p, image(z, side, inst))
    except DomainError:
        return math.inf


def verify_best_proximity(
    z_A: Sequence[float], z_B: Sequence[float], inst: Instance, tol: float = 1e-6
) -> MembershipReport:
    """z_A, z_B realize D and each lies (numerically) in the other's image."""
    z_A, z_B = make_point(z_A), make_point(z_B)
    D = inst.D
    distances = {
        "|d(z_A,z_B)-D|": abs(distance(z_A, z_B) - D),
        "d(z_B,Tz_A)": _gap_to_image(z_B, z_A, Side.A, inst),
        "d(z_A,Tz_B)": _gap_to_image(z_A, z_B, Side.B, inst),
        "|d(z_A,B)-D|": abs(point_to_set_distance(z_A, inst.B) - D),
    }
    failed = [name for name, value in distances.items() if value > tol]
    return MembershipReport(not failed, distances, failed)


def _describe(report: MembershipReport, tol: float) -> str:
    return ", ".join(f"{k} = {report.distances[k]:.3g} > tol {tol:g}" for k in report.failed)


def detect_limit(trace: IterationTrace, inst: Instance, tol: float = 1e-6) -> Outcome:
    if trace.D <= tol:
        z = trace.points[-1]
        report = verify_fixed_point(z, inst, tol, side=trace.sides[-1])
        if report.passed:
            return FixedPoint(z)
        return NotConverged(f"fixed-point check failed: {_describe(report, tol)}")

    last = {}
    for p, s in zip(trace.points, trace.sides):
        last[s] = p
    if Side.A not in last or Side.B not in last:
        return NotConverged("trace does not visit both sides")
    report = verify_best_proximity(last[Side.A], last[Side.B], inst, tol)
    if report.passed:
        return BestProximityPair(last[Side.A], last[Side.B])
    return NotConverged(f"best-proximity check failed: {_describe(report, tol)}")


def compare_fixed_points(z1: Sequence[float], z2: Sequence[float], inst: Instance, tol: float = 1e-6) -> MembershipReport:
    """Two fixed points of an intersecting instance coincide, and so do their images."""
    z1, z2 = make_point(z1), make_point(z2)
    distances = {
        "d(z1,z2)": distance(z1, z2),
        "H(Tz1,Tz2)": hausdorff(image(z1, locate(z1, inst), inst), image(z2, locate(z2, inst), inst)),
    }
    failed = [name for name, value in distances.items() if value > 2 * tol]
    return MembershipReport(not failed, distances, failed)


def run(
    inst: Instance,
    x1: Sequence[float],
    policy: SelectionPolicy = SelectionPolicy(),
    settings: Optional[IterationSettings] = None,
) -> IterationTrace:
    """Iterate and attach the detected outcome."""
    settings = settings or IterationSettings()
    trace = iterate(inst, x1, policy, settings.max_iter, settings.tol)
    outcome = detect_limit(trace, inst, settings.tol)
    if isinstance(outcome, NotConverged):
        logger.warning("no limit from %s: %s", trace.points[0], outcome.reason)
    return replace(trace, outcome=outcome)


def run_many(
    inst: Instance,
    starts: Sequence[Sequence[float]],
    policy: SelectionPolicy = SelectionPolicy(),
    settings: Optional[IterationSettings] = None,
    workers: int = 1,
) -> list[IterationTrace]:
    """Independent runs from several starts; results keep the order of ``starts``."""
    if workers <= 1:
        return [run(inst, x, policy, settings) for x in starts]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda x: run(inst, x, policy, settings), starts))


def outcome_to_dict(outcome: Optional[Outcome]) -> dict[str, Any]:
    if isinstance(outcome, FixedPoint):
        return {"kind": outcome.kind, "z": list(outcome.z)}
    if isinstance(outcome, BestProximityPair):
        return {"kind": outcome.kind, "z_A": list(outcome.z_A), "z_B": list(outcome.z_B)}
    if isinstance(outcome, NotConverged):
        return {"kind": outcome.kind, "reason": outcome.reason}
    return {"kind": None}
