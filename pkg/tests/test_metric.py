"""Tests for proxima.metric: point sets, distances, Hausdorff, grids."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from proxima.errors import InstanceFormatError
from proxima.metric import (
    PointSet,
    Side,
    directed_hausdorff,
    distance,
    grid_interval,
    hausdorff,
    make_point,
    nearest_index,
    pairwise_distances,
    point_to_set_distance,
    set_distance,
)


def _set(*points) -> PointSet:
    return PointSet.from_points(points)


def _naive_hausdorff(P, Q) -> float:
    def directed(X, Y):
        return max(min(math.dist(x, y) for y in Y) for x in X)

    return max(directed(P, Q), directed(Q, P))


def _naive_set_distance(P, Q) -> float:
    return min(math.dist(p, q) for p in P for q in Q)


_coord = st.floats(min_value=-100, max_value=100, allow_nan=False, allow_infinity=False)


@st.composite
def _cloud_pair(draw):
    dim = draw(st.integers(min_value=1, max_value=3))
    point = st.tuples(*([_coord] * dim))
    P = draw(st.lists(point, min_size=1, max_size=50))
    Q = draw(st.lists(point, min_size=1, max_size=50))
    return P, Q


@st.composite
def _triple(draw):
    dim = draw(st.integers(min_value=1, max_value=3))
    point = st.tuples(*([_coord] * dim))
    return draw(point), draw(point), draw(point)


class TestPointSet:
    def test_from_points_keeps_order(self):
        s = _set((3.0,), (1.0,), (2.0,))
        assert s.as_points() == [(3.0,), (1.0,), (2.0,)]
        assert s.dimension == 1
        assert len(s) == 3

    def test_empty_rejected(self):
        with pytest.raises(InstanceFormatError, match="nonempty"):
            PointSet.from_points([], Side.A)

    def test_mixed_dimensions_rejected(self):
        with pytest.raises(InstanceFormatError, match="Inconsistent"):
            _set((0.0,), (1.0, 2.0))

    def test_non_finite_rejected(self):
        with pytest.raises(InstanceFormatError):
            make_point([float("nan")])
        with pytest.raises(InstanceFormatError):
            PointSet(np.array([[1.0], [np.inf]]))

    def test_points_are_read_only(self):
        s = _set((0.0,), (1.0,))
        with pytest.raises(ValueError):
            s.points[0, 0] = 5.0

    def test_contains_is_exact(self):
        s = _set((0.1,), (0.2,))
        assert s.contains((0.1,))
        assert not s.contains((0.1 + 1e-15,))
        assert not s.contains((0.1, 0.0))

    def test_opposite_side(self):
        assert Side.A.opposite() is Side.B
        assert Side.B.opposite() is Side.A
        with pytest.raises(ValueError):
            Side.IMAGE.opposite()


class TestDistances:
    def test_distance_pythagoras(self):
        assert distance((0.0, 0.0), (3.0, 4.0)) == 5.0

    def test_distance_dimension_mismatch(self):
        with pytest.raises(InstanceFormatError, match="Dimension mismatch"):
            distance((0.0,), (1.0, 2.0))

    def test_point_to_set(self):
        assert point_to_set_distance((0.0,), _set((1.0,), (3.0,))) == 1.0

    def test_set_distance_attained(self):
        assert set_distance(_set((0.0, 0.0), (1.0, 0.0)), _set((0.0, 2.0),)) == 2.0

    def test_pairwise_shape(self):
        m = pairwise_distances(_set((0.0,), (1.0,)), _set((0.0,), (2.0,), (5.0,)))
        assert m.shape == (2, 3)
        assert m[1, 2] == 4.0


class TestHausdorff:
    def test_single_vs_pair(self):
        assert hausdorff(_set((0.0,)), _set((1.0,), (3.0,))) == 3.0
        assert set_distance(_set((0.0,)), _set((1.0,), (3.0,))) == 1.0

    def test_identical_sets(self):
        s = _set((0.0, 1.0), (2.0, 3.0))
        assert hausdorff(s, s) == 0.0

    def test_sqrt5_example(self):
        H = hausdorff(_set((0.0, 0.0), (1.0, 0.0)), _set((0.0, 2.0),))
        assert H == pytest.approx(math.sqrt(5), abs=1e-12)

    def test_directed_is_asymmetric(self):
        A, B = _set((0.0,)), _set((1.0,), (3.0,))
        assert directed_hausdorff(A, B) == 1.0
        assert directed_hausdorff(B, A) == 3.0

    @settings(max_examples=1000, deadline=None)
    @given(_cloud_pair())
    def test_matches_naive_oracle(self, pair):
        P, Q = pair
        A, B = PointSet.from_points(P), PointSet.from_points(Q)
        assert abs(hausdorff(A, B) - _naive_hausdorff(P, Q)) <= 1e-12 * max(1.0, _naive_hausdorff(P, Q))
        assert abs(set_distance(A, B) - _naive_set_distance(P, Q)) <= 1e-12 * max(1.0, _naive_set_distance(P, Q))

    @settings(max_examples=200, deadline=None)
    @given(_cloud_pair())
    def test_symmetric(self, pair):
        A, B = (PointSet.from_points(p) for p in pair)
        assert hausdorff(A, B) == hausdorff(B, A)
        assert set_distance(A, B) == set_distance(B, A)


class TestMetricAxioms:
    @settings(max_examples=1000, deadline=None)
    @given(_triple())
    def test_axioms(self, triple):
        x, y, z = triple
        assert distance(x, x) == 0.0
        assert distance(x, y) == distance(y, x)
        assert distance(x, z) <= distance(x, y) + distance(y, z) + 1e-9


class TestNearestIndex:
    def test_picks_nearest(self):
        assert nearest_index((2.1,), _set((0.0,), (2.0,), (5.0,))) == 1

    def test_tie_goes_to_lexicographically_smallest(self):
        # 1.5 and 2.5 are equidistant from 2; listed order puts 2.5 first
        assert nearest_index((2.0,), _set((2.5,), (1.5,))) == 1

    def test_tie_in_two_dimensions(self):
        s = _set((1.0, 1.0), (1.0, -1.0), (-1.0, 0.0 + 1.0))
        assert s.point(nearest_index((0.0, 0.0), s)) == (-1.0, 1.0)


class TestGridInterval:
    def test_one_dimensional(self):
        g = grid_interval([1.0], [2.0], 5, Side.A)
        assert g.as_points() == [(1.0,), (1.25,), (1.5,), (1.75,), (2.0,)]
        assert g.label is Side.A
        assert g.region.contains((1.3,))
        assert not g.region.contains((2.1,))

    def test_lexicographic_order_in_2d(self):
        g = grid_interval([0.0, 0.0], [1.0, 1.0], 2, Side.B)
        assert g.as_points() == [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)]

    def test_covers_uses_region(self):
        g = grid_interval([0.0], [1.0], 3, Side.A)
        assert g.covers((0.3,))
        assert not g.contains((0.3,))

    def test_degenerate_box(self):
        g = grid_interval([1.0], [1.0], 1, Side.A)
        assert g.as_points() == [(1.0,)]

    def test_single_point_on_wide_box_rejected(self):
        with pytest.raises(InstanceFormatError, match="points_per_axis"):
            grid_interval([0.0], [1.0], 1, Side.A)

    def test_inverted_bounds_rejected(self):
        with pytest.raises(InstanceFormatError, match="exceeds"):
            grid_interval([2.0], [1.0], 3, Side.A)
