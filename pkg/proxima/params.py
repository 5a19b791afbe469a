"""Parameter domain for the contractive condition: regions of (alpha, beta),
derived constants K1/K2/omega*, and the M1, M2, M and phi functions.

Region predicates are evaluated with exact float comparisons, strict and
non-strict exactly as the inequalities are written. The four sub-regions are
not actually disjoint, so ``classify_region`` applies the fixed precedence
Delta1 -> Delta2 -> Delta3 -> Delta4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from proxima.errors import DomainError, ParamsError, ParamsUnsupported


class Region(str, Enum):
    DELTA1 = "Delta1"
    DELTA2 = "Delta2"
    DELTA3 = "Delta3"
    DELTA4 = "Delta4"
    DELTA_ONLY = "DeltaOnly"
    OUTSIDE = "Outside"


RAW_REGIONS = (Region.DELTA1, Region.DELTA2, Region.DELTA3, Region.DELTA4)


@dataclass(frozen=True)
class ContractionParams:
    K: float
    alpha: float
    beta: float
    omega: Optional[float] = None  # None -> use omega*

    def __post_init__(self) -> None:
        for name in ("K", "alpha", "beta"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ParamsError(f"'{name}' must be a finite number, got {value!r}")
        if not 0 <= self.K < 1:
            raise ParamsError(f"K must lie in [0, 1), got {self.K}")
        if not in_delta(self.alpha, self.beta):
            raise ParamsError(
                f"(alpha, beta) = ({self.alpha}, {self.beta}) must satisfy "
                "alpha >= 0, beta >= 0, alpha + beta < 1"
            )
        if self.omega is not None:
            if not isinstance(self.omega, (int, float)) or not math.isfinite(self.omega) or self.omega <= 0:
                raise ParamsError(f"omega must be a positive number or null, got {self.omega!r}")


@dataclass(frozen=True)
class DerivedConstants:
    K1: float
    K2: float
    omega_star: float


@dataclass(frozen=True)
class DistanceBundle:
    """The five distances entering M; the image terms are point-to-set distances."""

    d_xy: float
    d_xTx: float
    d_yTy: float
    d_xTy: float
    d_yTx: float


@dataclass(frozen=True)
class RegionAudit:
    grid: int
    in_delta: int
    classified: int
    raw_counts: dict[str, int]
    label_counts: dict[str, int]
    delta4_outside_12: int
    overlaps: int


def in_delta(alpha: float, beta: float) -> bool:
    return alpha >= 0 and beta >= 0 and alpha + beta < 1


def _region_masks(alpha, beta) -> dict[Region, object]:
    """Raw sub-region predicates; works on floats and on numpy arrays alike."""
    a, b = alpha, beta
    in_d = (a >= 0) & (b >= 0) & (a + b < 1)
    return {
        Region.DELTA1: in_d & (a <= b) & (a * (1 + a) + b < 1),
        Region.DELTA2: in_d & (a >= b) & (b * (1 + b) + a < 1),
        Region.DELTA3: in_d & (a > 0) & (a < 0.5) & ((1 - a) / 2 > b) & (b >= 1 - a * (1 + a)),
        Region.DELTA4: in_d
        & (a >= 0)
        & (a <= 0.5)
        & ((1 - a) / 2 <= b)
        & (b < 1 - a * (1 + a))
        & (a * (1 + a) + b * (2 - b) < 1),
    }


def raw_region_membership(alpha: float, beta: float) -> set[Region]:
    """Every sub-region whose inequalities hold, without precedence."""
    if not in_delta(alpha, beta):
        raise DomainError(f"(alpha, beta) = ({alpha}, {beta}) is outside Delta")
    masks = _region_masks(float(alpha), float(beta))
    return {r for r in RAW_REGIONS if bool(masks[r])}


def classify_region(alpha: float, beta: float) -> Region:
    if not (math.isfinite(alpha) and math.isfinite(beta)) or not in_delta(alpha, beta):
        return Region.OUTSIDE
    members = raw_region_membership(alpha, beta)
    for region in RAW_REGIONS:
        if region in members:
            return region
    return Region.DELTA_ONLY


def derived_constants(params: ContractionParams) -> DerivedConstants:
    if not isinstance(params, ContractionParams):
        raise ParamsError(f"expected ContractionParams, got {type(params).__name__}")
    a, b = params.alpha, params.beta
    K1 = max(params.K, b / (1 - a), a / (1 - b))
    K2 = max(1 / (1 - a), 1 / (1 - b))
    if not K1 < 1:
        raise ParamsError(f"K1 = {K1} is not < 1 for {params}")
    return DerivedConstants(K1=K1, K2=K2, omega_star=(1 - K1) / K2)


def resolve_omega(params: ContractionParams, constants: DerivedConstants) -> float:
    return params.omega if params.omega is not None else constants.omega_star


def m1(b: DistanceBundle, K: float) -> float:
    return K * max(b.d_xy, b.d_xTx, b.d_yTy, 0.5 * (b.d_xTy + b.d_yTx))


def m2(b: DistanceBundle, alpha: float, beta: float) -> float:
    return alpha * b.d_xTx + beta * b.d_yTy


def m_value(b: DistanceBundle, params: ContractionParams) -> float:
    return max(m1(b, params.K), m2(b, params.alpha, params.beta))


def phi(b: DistanceBundle, params: ContractionParams, region: Region) -> float:
    """Premise weight of the contractive implication; always in (0, 1]."""
    if region is Region.OUTSIDE:
        raise DomainError(f"phi is undefined outside Delta ({params.alpha}, {params.beta})")
    if m2(b, params.alpha, params.beta) > m1(b, params.K):
        if region in (Region.DELTA1, Region.DELTA2):
            return 1.0
        if region is Region.DELTA3:
            return 1 - params.beta
        if region is Region.DELTA4:
            return (1 - params.beta) / (1 - params.beta + params.alpha)
        raise ParamsUnsupported(
            f"phi is undefined for (alpha, beta) = ({params.alpha}, {params.beta}) "
            "in none of Delta1..Delta4 when M2 > M1"
        )
    return 1.0 if params.K < 0.5 else 1 - params.K


def audit_regions(n: int) -> RegionAudit:
    """Count raw region memberships over the n x n grid {i/n} x {j/n} restricted to Delta."""
    if n < 1:
        raise ParamsError(f"audit grid must be >= 1, got {n}")
    ticks = np.arange(n, dtype=float) / n
    alpha, beta = np.meshgrid(ticks, ticks, indexing="ij")
    in_d = (alpha >= 0) & (beta >= 0) & (alpha + beta < 1)
    masks = _region_masks(alpha, beta)

    any_raw = np.zeros_like(in_d)
    member_count = np.zeros(in_d.shape, dtype=int)
    for region in RAW_REGIONS:
        any_raw |= masks[region]
        member_count += masks[region].astype(int)

    labels: dict[str, int] = {}
    remaining = in_d.copy()
    for region in RAW_REGIONS:
        hit = remaining & masks[region]
        labels[region.value] = int(hit.sum())
        remaining &= ~hit
    labels[Region.DELTA_ONLY.value] = int(remaining.sum())

    return RegionAudit(
        grid=n,
        in_delta=int(in_d.sum()),
        classified=sum(labels.values()),
        raw_counts={r.value: int(masks[r].sum()) for r in RAW_REGIONS},
        label_counts=labels,
        delta4_outside_12=int((masks[Region.DELTA4] & ~masks[Region.DELTA1] & ~masks[Region.DELTA2]).sum()),
        overlaps=int((member_count > 1).sum()),
    )
