"""Checks of the contractive implication over pair samples.

A certificate is a record of pairs checked and violations found. For
parametric instances it is a sampled check and is labelled as such.
"""

from __future__ import annotations

import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np

from proxima.errors import PreconditionError
from proxima.mapping import Instance, Located, image
from proxima.metric import (
    PointSet,
    Side,
    distance,
    hausdorff,
    nearest_index,
    point_to_set_distance,
)
from proxima.params import DistanceBundle, Region, classify_region, m_value, phi
from proxima.settings import CertifySettings

logger = logging.getLogger(__name__)


def slack_for(rhs: float, relative: float) -> float:
    return relative * max(1.0, abs(rhs))


@dataclass(frozen=True)
class PremiseResult:
    holds: bool
    phi: float
    region: Region
    bundle: DistanceBundle


@dataclass(frozen=True)
class PairVerdict:
    x: Located
    y: Located
    premise_holds: bool
    lhs: float
    rhs: float
    satisfied: bool
    bundle: DistanceBundle

    def to_dict(self) -> dict[str, Any]:
        return {
            "x": list(self.x.point),
            "x_side": self.x.side.value,
            "y": list(self.y.point),
            "y_side": self.y.side.value,
            "premise_holds": self.premise_holds,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "satisfied": self.satisfied,
            "bundle": vars(self.bundle).copy(),
        }


@dataclass(frozen=True)
class DerivedVerdict:
    """One step of the per-step corollary, or the literal two-argument form."""

    x: Located
    y: Located
    form: str  # "per_step" | "literal"
    lhs: float
    rhs: float
    satisfied: bool

    def to_dict(self) -> dict[str, Any]:
        return {
            "x": list(self.x.point),
            "x_side": self.x.side.value,
            "y": list(self.y.point),
            "y_side": self.y.side.value,
            "form": self.form,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "satisfied": self.satisfied,
        }


@dataclass
class Certificate:
    mode: str  # "exhaustive" | "sampled"
    pairs_checked: int
    violations: list[PairVerdict] = field(default_factory=list)
    derived_violations: list[DerivedVerdict] = field(default_factory=list)
    literal_derived_failures: list[DerivedVerdict] = field(default_factory=list)
    omega: float = 0.0
    seed: Optional[int] = None

    @property
    def certified(self) -> bool:
        return not self.violations and not self.derived_violations

    def to_dict(self) -> dict[str, Any]:
        return {
            "mode": self.mode,
            "certified": self.certified,
            "pairs_checked": self.pairs_checked,
            "omega": self.omega,
            "seed": self.seed,
            "violations": [v.to_dict() for v in self.violations],
            "derived_violations": [v.to_dict() for v in self.derived_violations],
            "literal_derived_failures": [v.to_dict() for v in self.literal_derived_failures],
        }


ImageFn = Callable[[Located], PointSet]


def _image_of(inst: Instance) -> ImageFn:
    return lambda loc: image(loc.point, loc.side, inst)


def _bundle(x: Located, y: Located, tx: PointSet, ty: PointSet) -> DistanceBundle:
    return DistanceBundle(
        d_xy=distance(x.point, y.point),
        d_xTx=point_to_set_distance(x.point, tx),
        d_yTy=point_to_set_distance(y.point, ty),
        d_xTy=point_to_set_distance(x.point, ty),
        d_yTx=point_to_set_distance(y.point, tx),
    )


def distance_bundle(x: Located, y: Located, inst: Instance) -> DistanceBundle:
    img = _image_of(inst)
    return _bundle(x, y, img(x), img(y))


def _premise(bundle: DistanceBundle, inst: Instance) -> PremiseResult:
    region = classify_region(inst.params.alpha, inst.params.beta)
    weight = phi(bundle, inst.params, region)
    return PremiseResult(weight * bundle.d_xTx <= bundle.d_xy, weight, region, bundle)


def check_premise(x: Located, y: Located, inst: Instance) -> PremiseResult:
    """Evaluate phi(x, y) d(x, Tx) <= d(x, y)."""
    return _premise(distance_bundle(x, y, inst), inst)


def _contraction(
    x: Located, y: Located, inst: Instance, img: ImageFn, relative_slack: float
) -> PairVerdict:
    tx, ty = img(x), img(y)
    bundle = _bundle(x, y, tx, ty)
    premise = _premise(bundle, inst)
    lhs = hausdorff(tx, ty)
    rhs = m_value(bundle, inst.params) + inst.omega * inst.D
    satisfied = (not premise.holds) or lhs <= rhs + slack_for(rhs, relative_slack)
    return PairVerdict(x, y, premise.holds, lhs, rhs, satisfied, bundle)


def check_contraction_pair(
    x: Located, y: Located, inst: Instance, relative_slack: float = 1e-9
) -> PairVerdict:
    """H(Tx, Ty) <= M + omega D whenever the premise holds."""
    return _contraction(x, y, inst, _image_of(inst), relative_slack)


def _per_step(
    x: Located, y: Located, inst: Instance, img: ImageFn, relative_slack: float
) -> DerivedVerdict:
    # y plays x_{n+1} in Tx_n; the next iterate is the nearest point of Ty.
    ty = img(y)
    nxt = ty.point(nearest_index(y.point, ty))
    lhs = distance(y.point, nxt)
    c = inst.constants
    rhs = c.K1 * distance(x.point, y.point) + c.K2 * inst.omega * inst.D
    return DerivedVerdict(x, y, "per_step", lhs, rhs, lhs <= rhs + slack_for(rhs, relative_slack))


def _literal(
    x: Located, y: Located, inst: Instance, img: ImageFn, relative_slack: float
) -> DerivedVerdict:
    lhs = point_to_set_distance(x.point, img(x))
    c = inst.constants
    rhs = c.K1 * distance(x.point, y.point) + c.K2 * inst.omega * inst.D
    return DerivedVerdict(x, y, "literal", lhs, rhs, lhs <= rhs + slack_for(rhs, relative_slack))


def check_derived_inequality(
    x: Located,
    y: Located,
    inst: Instance,
    *,
    literal: bool = False,
    relative_slack: float = 1e-9,
) -> DerivedVerdict:
    """Per-step corollary d(y, y') <= K1 d(x, y) + K2 omega D for y in Tx.

    With ``literal=True`` the two-argument form d(x, Tx) <= K1 d(x, y) + K2 omega D
    is evaluated instead; it is informational only.
    """
    check = _literal if literal else _per_step
    return check(x, y, inst, _image_of(inst), relative_slack)


# ---------------------------------------------------------------------------
# Pair sampling
# ---------------------------------------------------------------------------


def _image_pairs(inst: Instance, img: ImageFn) -> list[tuple[Located, Located]]:
    pairs = []
    for x in inst.domain_points():
        for y in img(x).as_points():
            pairs.append((x, Located(y, x.side.opposite())))
    return pairs


def _random_point(inst: Instance, side: Side, rng: np.random.Generator) -> Located:
    cloud = inst.side_set(side)
    region = cloud.region
    if region is None or inst.map.exact_domain:
        return Located(cloud.point(int(rng.integers(len(cloud)))), side)
    low, high = np.array(region.low), np.array(region.high)
    coords = low + (high - low) * rng.random(len(low))
    return Located(tuple(float(v) for v in coords), side)


def sample_pairs(inst: Instance, plan: CertifySettings) -> tuple[str, list[tuple[Located, Located]]]:
    """Ordered list of (x, y) pairs the certificate covers."""
    domain = inst.domain_points()
    if inst.map.exact_domain:
        return "exhaustive", [(x, y) for x in domain for y in domain]

    img = _caching(_image_of(inst))
    pairs: list[tuple[Located, Located]] = []
    if plan.include_image_pairs:
        pairs.extend(_image_pairs(inst, img))
    if plan.cross_grid:
        a_side = [p for p in domain if p.side is Side.A]
        b_side = [p for p in domain if p.side is Side.B]
        pairs.extend((a, b) for a in a_side for b in b_side)
        pairs.extend((b, a) for b in b_side for a in a_side)
    rng = np.random.default_rng(plan.seed)
    for _ in range(plan.random_pairs):
        x = _random_point(inst, (Side.A, Side.B)[int(rng.integers(2))], rng)
        y = _random_point(inst, (Side.A, Side.B)[int(rng.integers(2))], rng)
        pairs.append((x, y))
    return "sampled", pairs


def _caching(img: ImageFn) -> ImageFn:
    """Memoize images; safe to share across the certify worker threads."""
    cache: dict[Located, PointSet] = {}
    lock = threading.Lock()

    def cached(loc: Located) -> PointSet:
        with lock:
            hit = cache.get(loc)
        if hit is None:
            # img runs unlocked; racing threads keep the first stored set
            hit = img(loc)
            with lock:
                hit = cache.setdefault(loc, hit)
        return hit

    return cached


def _sort_key(v) -> tuple:
    return (v.x.side.value, v.x.point, v.y.side.value, v.y.point)


def _run_chunks(fn, items: list, workers: int) -> list:
    if workers <= 1 or len(items) < 2 * workers:
        return [fn(item) for item in items]
    size = -(-len(items) // workers)
    chunks = [items[i:i + size] for i in range(0, len(items), size)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = pool.map(lambda chunk: [fn(item) for item in chunk], chunks)
    return [v for part in parts for v in part]


def certify(inst: Instance, plan: Optional[CertifySettings] = None) -> Certificate:
    """Check the contractive implication and the per-step corollary."""
    plan = plan or CertifySettings()
    img = _caching(_image_of(inst))
    mode, pairs = sample_pairs(inst, plan)
    slack = plan.comparison_slack

    verdicts = _run_chunks(lambda p: _contraction(p[0], p[1], inst, img, slack), pairs, plan.workers)
    step_pairs = _image_pairs(inst, img)
    derived = _run_chunks(lambda p: _per_step(p[0], p[1], inst, img, slack), step_pairs, plan.workers)

    cert = Certificate(
        mode=mode,
        pairs_checked=len(verdicts),
        violations=sorted((v for v in verdicts if not v.satisfied), key=_sort_key),
        derived_violations=sorted((v for v in derived if not v.satisfied), key=_sort_key),
        omega=inst.omega,
        seed=plan.seed if mode == "sampled" else None,
    )
    if plan.literal_derived:
        literal = [_literal(x, y, inst, img, slack) for x, y in step_pairs]
        cert.literal_derived_failures = sorted((v for v in literal if not v.satisfied), key=_sort_key)
        if cert.literal_derived_failures:
            logger.warning(
                "literal two-argument derived inequality fails at %d pairs (informational)",
                len(cert.literal_derived_failures),
            )
    logger.debug(
        "certify %s: %d pairs, %d violations, %d derived violations",
        mode, cert.pairs_checked, len(cert.violations), len(cert.derived_violations),
    )
    return cert


def required_omega(inst: Instance, plan: Optional[CertifySettings] = None) -> float:
    """Smallest omega making every sampled pair and corollary step pass.

    Only meaningful for D > 0; premise evaluation does not depend on omega.
    """
    if inst.D <= 0:
        raise PreconditionError("required_omega needs disjoint sets (D > 0)")
    plan = plan or CertifySettings()
    img = _caching(_image_of(inst))
    _, pairs = sample_pairs(inst, plan)
    need = 0.0
    for x, y in pairs:
        tx, ty = img(x), img(y)
        bundle = _bundle(x, y, tx, ty)
        if _premise(bundle, inst).holds:
            need = max(need, (hausdorff(tx, ty) - m_value(bundle, inst.params)) / inst.D)
    c = inst.constants
    for x, y in _image_pairs(inst, img):
        ty = img(y)
        step = distance(y.point, ty.point(nearest_index(y.point, ty)))
        need = max(need, (step - c.K1 * distance(x.point, y.point)) / (c.K2 * inst.D))
    return need
