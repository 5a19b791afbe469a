"""Analytically solved instances for demos and acceptance checks.

Families register by name in ``GALLERY_FAMILIES`` so the CLI and instance
files (map kind ``gallery``) can build them from a name plus keyword params.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np

from proxima.certifier import certify, required_omega
from proxima.errors import ParamsError
from proxima.mapping import (
    AffineMap,
    AffinePiece,
    BallMap,
    GroundTruth,
    Instance,
    TableMap,
)
from proxima.metric import PointSet, Side, grid_interval
from proxima.params import ContractionParams
from proxima.settings import CertifySettings

logger = logging.getLogger(__name__)

OMEGA_SCAN_STEP = 0.05
OMEGA_SCAN_STEPS = 40
# Smaller random sample for the scan; the scan result is re-checked by certify.
SCAN_PLAN = CertifySettings(random_pairs=1_000)


def _piece(m: float, c: float) -> AffinePiece:
    return AffinePiece(np.array([[m]], dtype=float), np.array([c], dtype=float))


def _check_resolution(resolution: int) -> None:
    if not isinstance(resolution, int) or isinstance(resolution, bool) or resolution < 2:
        raise ParamsError(f"resolution must be an integer >= 2, got {resolution!r}")


def _midpoint_sets(resolution: int) -> tuple[PointSet, PointSet]:
    return (
        grid_interval([1.0], [2.0], resolution, Side.A),
        grid_interval([-2.0], [-1.0], resolution, Side.B),
    )


def _midpoint_pieces() -> tuple[AffinePiece, AffinePiece]:
    # T x = -(1 + (x - 1)/2) on A and T x = 1 + (-x - 1)/2 on B
    return _piece(-0.5, -0.5), _piece(-0.5, 0.5)


def make_midpoint_cyclic(resolution: int = 101) -> Instance:
    """Disjoint intervals [1, 2] and [-2, -1]; the contraction is tight on cross pairs."""
    _check_resolution(resolution)
    A, B = _midpoint_sets(resolution)
    return Instance(
        dimension=1,
        A=A,
        B=B,
        map=AffineMap(*_midpoint_pieces()),
        params=ContractionParams(K=0.5, alpha=0.0, beta=0.0, omega=0.5),
        ground_truth=GroundTruth(D=2.0, z_A=(1.0,), z_B=(-1.0,)),
        metadata={"family": "midpoint", "resolution": resolution, "expected_certified": True},
    )


def make_intersecting(k: float = 0.5, resolution: int = 101) -> Instance:
    """[0, 1] and [-1, 0] touching at 0, with T x = -k x."""
    if not isinstance(k, (int, float)) or not 0 < k < 1:
        raise ParamsError(f"contraction factor k must lie in (0, 1), got {k!r}")
    _check_resolution(resolution)
    return Instance(
        dimension=1,
        A=grid_interval([0.0], [1.0], resolution, Side.A),
        B=grid_interval([-1.0], [0.0], resolution, Side.B),
        map=AffineMap(_piece(-k, 0.0), _piece(-k, 0.0)),
        params=ContractionParams(K=float(k), alpha=0.0, beta=0.0),
        ground_truth=GroundTruth(D=0.0, fixed_point=(0.0,)),
        metadata={"family": "intersecting", "k": k, "resolution": resolution, "expected_certified": True},
    )


def make_expansive_counterexample(resolution: int = 101) -> Instance:
    """T x = -x on the midpoint intervals: cyclic but not contractive."""
    _check_resolution(resolution)
    A, B = _midpoint_sets(resolution)
    return Instance(
        dimension=1,
        A=A,
        B=B,
        map=AffineMap(_piece(-1.0, 0.0), _piece(-1.0, 0.0)),
        params=ContractionParams(K=0.5, alpha=0.0, beta=0.0, omega=0.5),
        ground_truth=GroundTruth(D=2.0),
        metadata={"family": "expansive", "resolution": resolution, "expected_certified": False},
    )


@dataclass
class OmegaScan:
    start: float
    step: float
    required: float
    tried: list[float] = field(default_factory=list)
    chosen: Optional[float] = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "start": self.start,
            "step": self.step,
            "required": self.required,
            "tried": self.tried,
            "chosen": self.chosen,
        }


def scan_omega(
    build: Callable[[Optional[float]], Instance],
    plan: CertifySettings = SCAN_PLAN,
) -> OmegaScan:
    """Smallest omega on the grid omega* + 0.05 j, j = 0..40, that certifies.

    The premise does not depend on omega, so ``required_omega`` gives the
    first candidate directly; certify then confirms it.
    """
    probe = build(None)
    start = probe.constants.omega_star
    scan = OmegaScan(start=start, step=OMEGA_SCAN_STEP, required=required_omega(probe, plan))
    first = max(0, math.ceil((scan.required - start) / OMEGA_SCAN_STEP - 1e-9))
    for j in range(first, OMEGA_SCAN_STEPS + 1):
        omega = round(start + OMEGA_SCAN_STEP * j, 10)
        scan.tried.append(omega)
        if certify(build(omega), plan).certified:
            scan.chosen = omega
            logger.debug("omega scan: required %.9g, chose %.9g after %d tries", scan.required, omega, len(scan.tried))
            return scan
    raise ParamsError(
        f"no omega in [{start}, {start + OMEGA_SCAN_STEP * OMEGA_SCAN_STEPS}] certifies "
        f"(required {scan.required:.6g})"
    )


def make_multivalued_ball(eps: float = 0.05, samples: int = 3, resolution: int = 21) -> Instance:
    """Midpoint map with each image widened to a sampled ball of radius eps."""
    if not isinstance(eps, (int, float)) or not 0 <= eps <= 0.5:
        # centres land in [-1.5, -1] and [1, 1.5]; beyond 0.5 the ball leaves the far end
        raise ParamsError(f"eps must lie in [0, 0.5], got {eps!r}")
    if not isinstance(samples, int) or isinstance(samples, bool) or samples < 1:
        raise ParamsError(f"samples must be an integer >= 1, got {samples!r}")
    _check_resolution(resolution)
    A, B = _midpoint_sets(resolution)
    ball = BallMap(*_midpoint_pieces(), radius=float(eps), samples=samples)

    def build(omega: Optional[float]) -> Instance:
        return Instance(
            dimension=1,
            A=A,
            B=B,
            map=ball,
            params=ContractionParams(K=0.5, alpha=0.0, beta=0.0, omega=omega),
            ground_truth=GroundTruth(D=2.0),
        )

    scan = scan_omega(build)
    inst = build(scan.chosen)
    inst.metadata.update(
        family="multivalued-ball",
        eps=eps,
        samples=samples,
        resolution=resolution,
        expected_certified=True,
        omega_scan=scan.to_dict(),
    )
    return inst


def make_finite_random(seed: int = 0, size_A: int = 8, size_B: int = 8, dimension: int = 2) -> Instance:
    """Random clouds with a random table map; no certification promise."""
    for name, size in (("size_A", size_A), ("size_B", size_B)):
        if not isinstance(size, int) or isinstance(size, bool) or size < 1:
            raise ParamsError(f"{name} must be an integer >= 1, got {size!r}")
    rng = np.random.default_rng(seed)
    A = PointSet(rng.random((size_A, dimension)), Side.A)
    B = PointSet(rng.random((size_B, dimension)) + 2.0, Side.B)

    def targets(count: int, opposite: Side, opposite_size: int) -> tuple:
        table = []
        for _ in range(count):
            k = int(rng.integers(1, min(3, opposite_size) + 1))
            picks = sorted(int(i) for i in rng.choice(opposite_size, size=k, replace=False))
            table.append(tuple((opposite, i) for i in picks))
        return tuple(table)

    table = TableMap(targets(size_A, Side.B, size_B), targets(size_B, Side.A, size_A))
    return Instance(
        dimension=dimension,
        A=A,
        B=B,
        map=table,
        params=ContractionParams(K=0.5, alpha=0.0, beta=0.0),
        metadata={
            "family": "finite-random",
            "seed": seed,
            "size_A": size_A,
            "size_B": size_B,
            "expected_certified": None,
        },
    )


GALLERY_FAMILIES: dict[str, Callable[..., Instance]] = {
    "midpoint": make_midpoint_cyclic,
    "intersecting": make_intersecting,
    "multivalued-ball": make_multivalued_ball,
    "expansive": make_expansive_counterexample,
    "finite-random": make_finite_random,
}


@dataclass(frozen=True)
class GallerySpec:
    """A family name plus the keyword parameters its builder takes."""

    family: str
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.family not in GALLERY_FAMILIES:
            raise ParamsError(
                f"Unknown gallery family {self.family!r}. Known: {sorted(GALLERY_FAMILIES)}"
            )

    def build(self) -> Instance:
        return GALLERY_FAMILIES[self.family](**self.params)


def build_family(family: str, **params: Any) -> Instance:
    return GallerySpec(family, dict(params)).build()
