"""Tests for proxima.gallery: analytically solved instances and the omega scan."""

from __future__ import annotations

import pytest

from proxima.certifier import certify
from proxima.errors import ParamsError
from proxima.gallery import (
    GALLERY_FAMILIES,
    GallerySpec,
    build_family,
    make_finite_random,
    make_intersecting,
    make_midpoint_cyclic,
    make_multivalued_ball,
    scan_omega,
)
from proxima.mapping import Instance, validate_cyclic
from proxima.params import ContractionParams


def _small(family: str) -> Instance:
    params = {"finite-random": {"seed": 1}}.get(family, {"resolution": 11})
    return build_family(family, **params)


class TestFamilies:
    @pytest.mark.parametrize("family", sorted(GALLERY_FAMILIES))
    def test_every_family_is_cyclic(self, family):
        assert validate_cyclic(_small(family)).valid

    @pytest.mark.parametrize("family", ["midpoint", "intersecting", "expansive", "multivalued-ball"])
    def test_ground_truth_distance(self, family):
        inst = _small(family)
        assert abs(inst.D - inst.ground_truth.D) <= 1e-12

    def test_midpoint_metadata(self):
        inst = make_midpoint_cyclic(11)
        assert inst.metadata == {"family": "midpoint", "resolution": 11, "expected_certified": True}
        assert inst.ground_truth.z_A == (1.0,)

    def test_intersecting_k(self):
        inst = make_intersecting(0.25, 11)
        assert inst.params.K == 0.25
        assert inst.ground_truth.fixed_point == (0.0,)

    @pytest.mark.parametrize("k", [0.0, 1.0, -0.5, "0.5"])
    def test_intersecting_bad_k(self, k):
        with pytest.raises(ParamsError, match="k must lie"):
            make_intersecting(k, 11)

    @pytest.mark.parametrize("resolution", [1, 0, 2.5, True])
    def test_bad_resolution(self, resolution):
        with pytest.raises(ParamsError, match="resolution"):
            make_midpoint_cyclic(resolution)


class TestFiniteRandom:
    def test_deterministic_per_seed(self):
        first, second = make_finite_random(4), make_finite_random(4)
        assert first.A.as_points() == second.A.as_points()
        assert first.map.from_A == second.map.from_A
        assert first.map.from_B == second.map.from_B

    def test_seeds_differ(self):
        assert make_finite_random(1).A.as_points() != make_finite_random(2).A.as_points()

    def test_sizes_and_targets(self):
        inst = make_finite_random(0, size_A=5, size_B=3)
        assert len(inst.A) == 5
        assert len(inst.B) == 3
        for entry in inst.map.from_A:
            assert 1 <= len(entry) <= 3
            indices = [i for _, i in entry]
            assert indices == sorted(set(indices))

    def test_sets_are_disjoint(self):
        assert make_finite_random(9).D > 0

    def test_bad_size(self):
        with pytest.raises(ParamsError, match="size_A"):
            make_finite_random(0, size_A=0)


class TestMultivaluedBall:
    def test_scan_picks_next_grid_omega(self):
        inst = make_multivalued_ball(0.05, 3, 21)
        scan = inst.metadata["omega_scan"]
        assert scan["start"] == 0.5
        assert scan["chosen"] == 0.55
        assert scan["required"] > 0.5
        assert inst.omega == 0.55

    def test_certified(self):
        assert certify(make_multivalued_ball(0.05, 3, 21)).certified

    def test_zero_radius_matches_midpoint(self):
        inst = make_multivalued_ball(0.0, 3, 21)
        assert inst.omega == 0.5

    @pytest.mark.parametrize("eps", [-0.01, 0.6])
    def test_eps_bounds(self, eps):
        with pytest.raises(ParamsError, match="eps"):
            make_multivalued_ball(eps, 3, 11)

    def test_samples_bounds(self):
        with pytest.raises(ParamsError, match="samples"):
            make_multivalued_ball(0.05, 0, 11)


class TestScanOmega:
    def test_midpoint_needs_no_increase(self):
        def build(omega):
            inst = make_midpoint_cyclic(11)
            return Instance(
                dimension=1, A=inst.A, B=inst.B, map=inst.map,
                params=ContractionParams(K=0.5, alpha=0.0, beta=0.0, omega=omega),
            )

        scan = scan_omega(build)
        assert scan.chosen == 0.5
        assert scan.tried == [0.5]


class TestGallerySpec:
    def test_unknown_family(self):
        with pytest.raises(ParamsError, match="Unknown gallery family"):
            GallerySpec("spiral")

    def test_build(self):
        inst = GallerySpec("midpoint", {"resolution": 5}).build()
        assert len(inst.A) == 5

    def test_bad_keyword(self):
        with pytest.raises(TypeError):
            build_family("midpoint", eps=0.1)
