"""Cyclic multivalued maps T: A u B -> A u B and the problem Instance.

Images are always finite point sets. Map kinds register by name, the same
way providers register in a lookup table, so instance files can name them.
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, NamedTuple, Optional, Sequence

import numpy as np

from proxima.errors import DomainError, InstanceFormatError
from proxima.metric import (
    Point,
    PointSet,
    Side,
    make_point,
    nearest_index,
    set_distance,
)
from proxima.params import ContractionParams, DerivedConstants, derived_constants, resolve_omega
from proxima.settings import validate_keys

logger = logging.getLogger(__name__)


class Located(NamedTuple):
    """A domain point together with the side it is taken on."""

    point: Point
    side: Side


# ---------------------------------------------------------------------------
# Map kinds
# ---------------------------------------------------------------------------


class CyclicMap(ABC):
    """Base class for map representations.

    Subclasses turn a domain point into the raw rows of its image; the
    ``image`` function wraps them into a PointSet and checks nonemptiness.
    """

    kind: str = ""
    # Table maps only accept exact cloud points; parametric maps accept the
    # whole continuum region the cloud discretizes.
    exact_domain: bool = False

    @abstractmethod
    def raw_image(self, x: np.ndarray, side: Side, inst: "Instance") -> np.ndarray:
        ...

    @abstractmethod
    def to_dict(self) -> dict[str, Any]:
        ...

    def check(self, inst: "Instance") -> None:
        """Structural validation against the instance's point clouds."""


@dataclass(frozen=True)
class TableMap(CyclicMap):
    """Per-point target lists. Targets default to the opposite side's cloud."""

    from_A: tuple[tuple[tuple[Side, int], ...], ...]
    from_B: tuple[tuple[tuple[Side, int], ...], ...]

    kind = "table"
    exact_domain = True

    def check(self, inst: "Instance") -> None:
        for side, entries in ((Side.A, self.from_A), (Side.B, self.from_B)):
            cloud = inst.side_set(side)
            if len(entries) != len(cloud):
                raise InstanceFormatError(
                    f"table has {len(entries)} entries for side {side.value}, "
                    f"which has {len(cloud)} points"
                )
            for i, targets in enumerate(entries):
                if not targets:
                    raise InstanceFormatError(f"table entry {side.value}[{i}] has an empty image")
                for target_side, index in targets:
                    size = len(inst.side_set(target_side))
                    if not 0 <= index < size:
                        raise InstanceFormatError(
                            f"table entry {side.value}[{i}] references {target_side.value}[{index}], "
                            f"but {target_side.value} has {size} points"
                        )

    def raw_image(self, x: np.ndarray, side: Side, inst: "Instance") -> np.ndarray:
        cloud = inst.side_set(side)
        hits = np.flatnonzero(np.all(cloud.points == x, axis=1))
        if len(hits) == 0:
            raise DomainError(f"{tuple(x)} is not a point of {side.value}")
        entries = self.from_A if side is Side.A else self.from_B
        return np.array(
            [inst.side_set(s).points[i] for s, i in entries[int(hits[0])]], dtype=float
        )

    def to_dict(self) -> dict[str, Any]:
        def encode(entries, side: Side):
            opposite = side.opposite()
            return [
                [i if s is opposite else [s.value, i] for s, i in targets] for targets in entries
            ]

        return {"kind": self.kind, "from_A": encode(self.from_A, Side.A), "from_B": encode(self.from_B, Side.B)}

    @classmethod
    def from_dict(cls, raw: dict, dimension: int) -> "TableMap":
        validate_keys("map", raw, frozenset({"kind", "from_A", "from_B"}),
                      frozenset({"from_A", "from_B"}), InstanceFormatError)

        def decode(entries, side: Side):
            if not isinstance(entries, list):
                raise InstanceFormatError(f"table 'from_{side.value}' must be a list")
            out = []
            for targets in entries:
                if not isinstance(targets, list):
                    raise InstanceFormatError("each table entry must be a list of targets")
                row = []
                for t in targets:
                    if isinstance(t, int) and not isinstance(t, bool):
                        row.append((side.opposite(), t))
                    elif isinstance(t, list) and len(t) == 2 and t[0] in ("A", "B") and isinstance(t[1], int):
                        row.append((Side(t[0]), t[1]))
                    else:
                        raise InstanceFormatError(f"invalid table target {t!r}")
                out.append(tuple(row))
            return tuple(out)

        return cls(decode(raw["from_A"], Side.A), decode(raw["from_B"], Side.B))


@dataclass(frozen=True, eq=False)
class AffinePiece:
    matrix: np.ndarray
    offset: np.ndarray

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ x + self.offset

    def to_dict(self) -> dict[str, Any]:
        return {"matrix": self.matrix.tolist(), "offset": self.offset.tolist()}

    @classmethod
    def from_dict(cls, raw: dict, dimension: int, where: str) -> "AffinePiece":
        validate_keys(where, raw, frozenset({"matrix", "offset"}),
                      frozenset({"matrix", "offset"}), InstanceFormatError)
        try:
            matrix = np.array(raw["matrix"], dtype=float)
            offset = np.array(raw["offset"], dtype=float)
        except (TypeError, ValueError) as exc:
            raise InstanceFormatError(f"'{where}' must contain numbers: {exc}") from exc
        if matrix.shape != (dimension, dimension) or offset.shape != (dimension,):
            raise InstanceFormatError(
                f"'{where}' must have a {dimension}x{dimension} matrix and a length-{dimension} offset"
            )
        if not (np.all(np.isfinite(matrix)) and np.all(np.isfinite(offset))):
            raise InstanceFormatError(f"'{where}' has non-finite entries")
        return cls(matrix, offset)


def _snap_rows(rows: np.ndarray, target: PointSet) -> np.ndarray:
    return np.array([target.points[nearest_index(r, target)] for r in rows], dtype=float)


@dataclass(frozen=True, eq=False)
class AffineMap(CyclicMap):
    """Single-valued map T x = M_side x + c_side, evaluated exactly unless snapping."""

    piece_A: AffinePiece
    piece_B: AffinePiece
    snap: bool = False

    kind = "affine"

    def centre(self, x: np.ndarray, side: Side) -> np.ndarray:
        piece = self.piece_A if side is Side.A else self.piece_B
        return piece.apply(x)

    def raw_image(self, x: np.ndarray, side: Side, inst: "Instance") -> np.ndarray:
        rows = self.centre(x, side).reshape(1, -1)
        if self.snap:
            rows = _snap_rows(rows, inst.side_set(side.opposite()))
        return rows

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "A": self.piece_A.to_dict(), "B": self.piece_B.to_dict(), "snap": self.snap}

    @classmethod
    def from_dict(cls, raw: dict, dimension: int) -> "AffineMap":
        validate_keys("map", raw, frozenset({"kind", "A", "B", "snap"}),
                      frozenset({"A", "B"}), InstanceFormatError)
        return cls(
            AffinePiece.from_dict(raw["A"], dimension, "map.A"),
            AffinePiece.from_dict(raw["B"], dimension, "map.B"),
            snap=_as_bool(raw.get("snap", False), "map.snap"),
        )


def ball_offsets(dimension: int, radius: float, samples: int) -> np.ndarray:
    """Symmetric sample offsets of the given radius, lexicographically sorted.

    One axis: ``samples`` evenly spaced values on [-radius, radius]. Higher
    dimensions: the per-axis lattice restricted to the closed ball.
    """
    if radius == 0 or samples == 1:
        return np.zeros((1, dimension))
    ticks = np.linspace(-radius, radius, samples)
    mesh = np.meshgrid(*([ticks] * dimension), indexing="ij")
    lattice = np.stack([m.reshape(-1) for m in mesh], axis=1)
    if dimension > 1:
        lattice = lattice[np.linalg.norm(lattice, axis=1) <= radius]
    return np.unique(lattice, axis=0)


@dataclass(frozen=True, eq=False)
class BallMap(AffineMap):
    """Affine centre plus a discretized ball, clipped to the opposite set."""

    radius: float = 0.0
    samples: int = 1

    kind = "ball"

    def __post_init__(self) -> None:
        if not self.radius >= 0:
            raise InstanceFormatError(f"ball radius must be >= 0, got {self.radius}")
        if self.samples < 1:
            raise InstanceFormatError(f"ball samples must be >= 1, got {self.samples}")

    def raw_image(self, x: np.ndarray, side: Side, inst: "Instance") -> np.ndarray:
        target = inst.side_set(side.opposite())
        centre = self.centre(x, side)
        rows = centre + ball_offsets(len(centre), self.radius, self.samples)
        low, high = _clip_bounds(target)
        rows = rows[np.all((rows >= low) & (rows <= high), axis=1)]
        if len(rows) and self.snap:
            rows = _snap_rows(rows, target)
        return np.unique(rows, axis=0) if len(rows) else rows

    def to_dict(self) -> dict[str, Any]:
        out = super().to_dict()
        out.update(kind=self.kind, radius=self.radius, samples=self.samples)
        return out

    @classmethod
    def from_dict(cls, raw: dict, dimension: int) -> "BallMap":
        validate_keys("map", raw, frozenset({"kind", "A", "B", "snap", "radius", "samples"}),
                      frozenset({"A", "B", "radius", "samples"}), InstanceFormatError)
        radius, samples = raw["radius"], raw["samples"]
        if not isinstance(radius, (int, float)) or isinstance(radius, bool):
            raise InstanceFormatError(f"map.radius must be a number, got {radius!r}")
        if not isinstance(samples, int) or isinstance(samples, bool):
            raise InstanceFormatError(f"map.samples must be an integer, got {samples!r}")
        return cls(
            AffinePiece.from_dict(raw["A"], dimension, "map.A"),
            AffinePiece.from_dict(raw["B"], dimension, "map.B"),
            snap=_as_bool(raw.get("snap", False), "map.snap"),
            radius=float(radius),
            samples=samples,
        )


def _clip_bounds(target: PointSet) -> tuple[np.ndarray, np.ndarray]:
    region = target.region
    if region is not None:
        return np.array(region.low), np.array(region.high)
    return target.points.min(axis=0), target.points.max(axis=0)


def _as_bool(value: Any, where: str) -> bool:
    if not isinstance(value, bool):
        raise InstanceFormatError(f"'{where}' must be true or false, got {value!r}")
    return value


MAP_KINDS: dict[str, type[CyclicMap]] = {
    "table": TableMap,
    "affine": AffineMap,
    "ball": BallMap,
}


def map_from_dict(raw: dict, dimension: int) -> CyclicMap:
    """Build a map from its JSON payload; ``gallery`` resolves a named family."""
    if not isinstance(raw, dict) or "kind" not in raw:
        raise InstanceFormatError("map must be an object with a 'kind'")
    kind = raw["kind"]
    if kind == "gallery":
        from proxima.gallery import build_family

        validate_keys("map", raw, frozenset({"kind", "family", "params"}),
                      frozenset({"family"}), InstanceFormatError)
        params = raw.get("params", {}) or {}
        if not isinstance(params, dict):
            raise InstanceFormatError("map.params must be an object")
        try:
            return build_family(raw["family"], **params).map
        except TypeError as exc:
            raise InstanceFormatError(f"invalid gallery map params: {exc}") from exc
    cls = MAP_KINDS.get(kind)
    if cls is None:
        raise InstanceFormatError(
            f"Unknown map kind {kind!r}. Known: {sorted(MAP_KINDS) + ['gallery']}"
        )
    return cls.from_dict(raw, dimension)


# ---------------------------------------------------------------------------
# Instance
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GroundTruth:
    D: Optional[float] = None
    fixed_point: Optional[Point] = None
    z_A: Optional[Point] = None
    z_B: Optional[Point] = None


@dataclass(frozen=True, eq=False)
class Instance:
    """A complete problem: sets A and B, the cyclic map, and its parameters."""

    dimension: int
    A: PointSet
    B: PointSet
    map: CyclicMap
    params: ContractionParams
    ground_truth: Optional[GroundTruth] = None
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.dimension < 1:
            raise InstanceFormatError(f"dimension must be >= 1, got {self.dimension}")
        for s in (self.A, self.B):
            if s.dimension != self.dimension:
                raise InstanceFormatError(
                    f"set {s.label.value} has dimension {s.dimension}, instance declares {self.dimension}"
                )
        self.map.check(self)

    @cached_property
    def D(self) -> float:
        return set_distance(self.A, self.B)

    @cached_property
    def constants(self) -> DerivedConstants:
        return derived_constants(self.params)

    @cached_property
    def omega(self) -> float:
        return resolve_omega(self.params, self.constants)

    def side_set(self, side: Side) -> PointSet:
        if side is Side.A:
            return self.A
        if side is Side.B:
            return self.B
        raise DomainError("an instance only has sides A and B")

    def in_domain(self, x: Sequence[float], side: Side) -> bool:
        cloud = self.side_set(side)
        if len(x) != self.dimension:
            return False
        return cloud.contains(x) if self.map.exact_domain else cloud.covers(x)

    def domain_points(self) -> list[Located]:
        return [Located(p, s) for s in (Side.A, Side.B) for p in self.side_set(s).as_points()]


def locate(x: Sequence[float], inst: Instance) -> Side:
    """Side on which x lies; A wins when x belongs to both."""
    for side in (Side.A, Side.B):
        if inst.in_domain(x, side):
            return side
    raise DomainError(f"{tuple(x)} lies in neither A nor B")


def image(x: Sequence[float], side: Side, inst: Instance) -> PointSet:
    """The finite image set Tx, labelled with the opposite side."""
    point = make_point(x)
    if not inst.in_domain(point, side):
        raise DomainError(f"{point} is not in the domain on side {side.value}")
    rows = inst.map.raw_image(np.array(point, dtype=float), side, inst)
    if len(rows) == 0:
        raise InstanceFormatError(f"image of {point} on side {side.value} is empty after clipping")
    return PointSet(rows, side.opposite())


@dataclass(frozen=True)
class CyclicViolation:
    point: Point
    side: Side
    image_point: Optional[Point]
    reason: str


@dataclass
class CyclicReport:
    checked: int = 0
    violations: list[CyclicViolation] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations


def validate_cyclic(inst: Instance) -> CyclicReport:
    """Check T(A) in B and T(B) in A at every domain point; never raises."""
    report = CyclicReport()
    for x, side in inst.domain_points():
        report.checked += 1
        target = inst.side_set(side.opposite())
        try:
            tx = image(x, side, inst)
        except (DomainError, InstanceFormatError) as exc:
            report.violations.append(CyclicViolation(x, side, None, str(exc)))
            continue
        for y in tx.as_points():
            inside = target.contains(y) if inst.map.exact_domain else target.covers(y)
            if not inside:
                report.violations.append(
                    CyclicViolation(x, side, y, f"image point lies outside {target.label.value}")
                )
    logger.debug("validated %d domain points, %d violations", report.checked, len(report.violations))
    return report


def require_cyclic(inst: Instance, shown: int = 3) -> None:
    """Raise ``InstanceFormatError`` naming the first violations of T(A) in B, T(B) in A."""
    report = validate_cyclic(inst)
    if report.valid:
        return
    details = "; ".join(
        f"{v.point} on side {v.side.value}: {v.reason}"
        + (f" ({v.image_point})" if v.image_point is not None else "")
        for v in report.violations[:shown]
    )
    raise InstanceFormatError(
        f"map is not cyclic: {len(report.violations)} violation(s) over "
        f"{report.checked} domain points; first: {details}"
    )
