"""Euclidean metric primitives over finite point clouds.

Closed sets are represented as finite point clouds, so every infimum and
supremum below is an attained minimum/maximum. No tolerance is applied here:
comparisons are exact and numeric slack lives in the certifier and iterator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence

import numpy as np

from proxima.errors import InstanceFormatError

Point = tuple[float, ...]


class Side(str, Enum):
    A = "A"
    B = "B"
    IMAGE = "image"

    def opposite(self) -> "Side":
        if self is Side.A:
            return Side.B
        if self is Side.B:
            return Side.A
        raise ValueError("image sets have no opposite side")


def make_point(coords: Iterable[float]) -> Point:
    """Validate coordinates and return them as a Point."""
    try:
        values = tuple(float(c) for c in coords)
    except (TypeError, ValueError) as exc:
        raise InstanceFormatError(f"Point coordinates must be numbers: {exc}") from exc
    if not values:
        raise InstanceFormatError("Point must have dimension >= 1")
    if not all(math.isfinite(v) for v in values):
        raise InstanceFormatError(f"Point coordinates must be finite, got {values}")
    return values


@dataclass(frozen=True)
class Box:
    """Axis-aligned continuum region a grid discretizes."""

    low: Point
    high: Point

    def contains(self, p: Sequence[float]) -> bool:
        return all(lo <= v <= hi for lo, v, hi in zip(self.low, p, self.high))


@dataclass(frozen=True)
class GridSpec:
    low: Point
    high: Point
    points_per_axis: int


@dataclass(frozen=True, eq=False)
class PointSet:
    """Finite nonempty point cloud, stored as a read-only (n, d) array."""

    points: np.ndarray
    label: Side = Side.IMAGE
    grid: Optional[GridSpec] = field(default=None)

    def __post_init__(self) -> None:
        arr = np.array(self.points, dtype=float)
        if arr.ndim == 1 and arr.size:
            arr = arr.reshape(-1, 1)
        if arr.ndim != 2 or arr.shape[0] == 0:
            raise InstanceFormatError(f"{self.label.value} point set must be nonempty")
        if arr.shape[1] == 0:
            raise InstanceFormatError("Points must have dimension >= 1")
        if not np.all(np.isfinite(arr)):
            raise InstanceFormatError(f"{self.label.value} point set has non-finite coordinates")
        arr.setflags(write=False)
        object.__setattr__(self, "points", arr)

    @classmethod
    def from_points(cls, points: Iterable[Iterable[float]], label: Side = Side.IMAGE) -> "PointSet":
        rows = [make_point(p) for p in points]
        if not rows:
            raise InstanceFormatError(f"{label.value} point set must be nonempty")
        dims = {len(r) for r in rows}
        if len(dims) != 1:
            raise InstanceFormatError(f"Inconsistent point dimensions in {label.value}: {sorted(dims)}")
        return cls(np.array(rows, dtype=float), label)

    @property
    def dimension(self) -> int:
        return int(self.points.shape[1])

    @property
    def region(self) -> Optional[Box]:
        if self.grid is None:
            return None
        return Box(self.grid.low, self.grid.high)

    def __len__(self) -> int:
        return int(self.points.shape[0])

    def point(self, index: int) -> Point:
        return tuple(float(v) for v in self.points[index])

    def as_points(self) -> list[Point]:
        return [self.point(i) for i in range(len(self))]

    def contains(self, p: Sequence[float]) -> bool:
        """Exact coordinate-wise membership."""
        row = np.asarray(p, dtype=float)
        if row.shape != (self.dimension,):
            return False
        return bool(np.any(np.all(self.points == row, axis=1)))

    def covers(self, p: Sequence[float]) -> bool:
        """Membership in the continuum region when there is one, else exact."""
        region = self.region
        if region is not None and len(p) == self.dimension:
            return region.contains(p)
        return self.contains(p)


def _as_matrix(p: Sequence[float] | np.ndarray) -> np.ndarray:
    arr = np.asarray(p, dtype=float)
    return arr.reshape(1, -1) if arr.ndim == 1 else arr


def _check_dims(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape[1] != b.shape[1]:
        raise InstanceFormatError(
            f"Dimension mismatch: {a.shape[1]} vs {b.shape[1]}"
        )


def pairwise_distances(P: PointSet | np.ndarray, Q: PointSet | np.ndarray) -> np.ndarray:
    """Distance matrix ``D[i, j] = d(P[i], Q[j])``."""
    a = _as_matrix(P.points if isinstance(P, PointSet) else P)
    b = _as_matrix(Q.points if isinstance(Q, PointSet) else Q)
    _check_dims(a, b)
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise InstanceFormatError("Distance to an empty set is undefined")
    diff = a[:, None, :] - b[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


def distance(p: Sequence[float], q: Sequence[float]) -> float:
    return float(pairwise_distances(_as_matrix(p), _as_matrix(q))[0, 0])


def point_to_set_distance(p: Sequence[float], S: PointSet) -> float:
    return float(np.min(pairwise_distances(_as_matrix(p), S)))


def set_distance(A: PointSet, B: PointSet) -> float:
    return float(np.min(pairwise_distances(A, B)))


def directed_hausdorff(A: PointSet, B: PointSet) -> float:
    return float(np.max(np.min(pairwise_distances(A, B), axis=1)))


def hausdorff(A: PointSet, B: PointSet) -> float:
    dist = pairwise_distances(A, B)
    return float(max(np.max(np.min(dist, axis=1)), np.max(np.min(dist, axis=0))))


def nearest_index(p: Sequence[float], S: PointSet) -> int:
    """Index of the point of S closest to p; ties go to the lexicographically smallest."""
    dist = pairwise_distances(_as_matrix(p), S)[0]
    best = np.flatnonzero(dist == dist.min())
    if len(best) == 1:
        return int(best[0])
    return int(min(best, key=lambda i: tuple(S.points[i])))


def grid_interval(
    low: Sequence[float],
    high: Sequence[float],
    points_per_axis: int,
    label: Side,
) -> PointSet:
    """Discretize the box [low, high] into a lexicographically ordered grid."""
    lo, hi = make_point(low), make_point(high)
    if len(lo) != len(hi):
        raise InstanceFormatError(f"grid bounds differ in dimension: {len(lo)} vs {len(hi)}")
    if any(a > b for a, b in zip(lo, hi)):
        raise InstanceFormatError(f"grid low {lo} exceeds high {hi}")
    if points_per_axis < 1 or (points_per_axis == 1 and lo != hi):
        raise InstanceFormatError(
            f"points_per_axis must be >= 2 for a nondegenerate box, got {points_per_axis}"
        )
    axes = [np.linspace(a, b, points_per_axis) for a, b in zip(lo, hi)]
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([m.reshape(-1) for m in mesh], axis=1)
    return PointSet(points, label, GridSpec(lo, hi, points_per_axis))
