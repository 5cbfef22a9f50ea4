"""
Testes das cotas de densidade.
"""

import math

import pytest

from kepler.models.packing import Box, Packing
from kepler.models.scoring import Constants, SchemeName, ScoreScheme
from kepler.services.bounds import (
    BoundsError,
    DensityBounds,
    bound_f,
    density,
    kepler_bound,
    unit_ball_volume,
)

from .conftest import TEST_MARGIN

KEPLER = math.pi / math.sqrt(18.0)
HF = ScoreScheme(name=SchemeName.HF)
VORONOI = ScoreScheme(name=SchemeName.VORONOI)


@pytest.fixture(scope="module")
def fcc_bounds(fcc, fcc_scorer) -> DensityBounds:
    return DensityBounds(fcc, scorer=fcc_scorer, margin=TEST_MARGIN)


class TestBoundFunctional:
    def test_hf_constants_give_kepler_density(self):
        result = bound_f(4.0, 4.0 * Constants.DELTA_OCT, 8.0 * Constants.PT)
        assert result.valid
        assert result.value == pytest.approx(KEPLER, abs=1e-12)
        assert kepler_bound().value == pytest.approx(KEPLER, abs=1e-12)

    def test_zero_theta(self):
        assert bound_f(1.0, KEPLER, 0.0).value == pytest.approx(KEPLER, abs=1e-12)

    def test_theta_at_pole(self):
        result = bound_f(1.0, 1.0, unit_ball_volume(3))
        assert not result.valid
        assert result.value is None

    @pytest.mark.parametrize("a,b", [(0.0, 1.0), (1.0, -1.0)])
    def test_non_positive_constants(self, a, b):
        with pytest.raises(BoundsError):
            bound_f(a, b, 0.0)

    def test_unit_ball_volumes(self):
        assert unit_ball_volume(2) == pytest.approx(math.pi)
        assert unit_ball_volume(3) == pytest.approx(4.0 * math.pi / 3.0)


class TestDensity:
    def test_single_ball(self):
        p = Packing(centers=[[0.0, 0.0, 0.0]], domain=Box.cube([0, 0, 0], 4.0))
        assert density(p, Box.cube([0, 0, 0], 4.0)) == pytest.approx(4.0 * math.pi / 3.0 / 64.0, abs=1e-12)

    def test_empty_cube(self):
        p = Packing(centers=[[10.0, 10.0, 10.0]], domain=Box.cube([0, 0, 0], 30.0))
        assert density(p, Box.cube([0, 0, 0], 2.0)) == 0.0

    def test_cube_outside_domain(self):
        p = Packing(centers=[[0.0, 0.0, 0.0]], domain=Box.cube([0, 0, 0], 4.0))
        with pytest.raises(BoundsError):
            density(p, Box.cube([3, 0, 0], 4.0))

    def test_fcc_period_cell(self, fcc_bounds):
        side = 2.0 * math.sqrt(2.0)
        cube = Box(min=[0.3, -0.7, 0.2], max=[0.3 + side, -0.7 + side, 0.2 + side])
        assert fcc_bounds.density(cube) == pytest.approx(KEPLER, abs=1e-9)

    def test_upper_density_of_period_cells(self, fcc_bounds):
        estimate = fcc_bounds.upper_density(2.0 * math.sqrt(2.0), stride=5.0, max_translates=8)
        assert estimate.lower_bound_only
        assert estimate.translates_tried > 1
        assert estimate.density == pytest.approx(KEPLER, abs=1e-9)

    def test_upper_density_cube_too_large(self, fcc_bounds):
        with pytest.raises(BoundsError):
            fcc_bounds.upper_density(100.0)


class TestTheta:
    def test_fcc_theta(self, fcc_bounds, fcc_vertex):
        theta = fcc_bounds.empirical_theta(HF, [fcc_vertex])
        assert theta.theta == pytest.approx(8.0 * Constants.PT, abs=1e-8)
        assert theta.argmax_vertex == fcc_vertex
        assert theta.argmax_point == pytest.approx([0.0, 0.0, 0.0], abs=1e-12)

    def test_voronoi_bound_table(self, fcc_bounds):
        (row,) = fcc_bounds.bound_table([VORONOI])
        assert row.theta == pytest.approx(0.0, abs=1e-9)
        assert row.valid
        assert row.f == pytest.approx(KEPLER, abs=1e-9)

    def test_no_interior_vertices(self):
        p = Packing(centers=[[0.0, 0.0, 0.0]], domain=Box.cube([0, 0, 0], 4.0))
        with pytest.raises(BoundsError):
            DensityBounds(p).empirical_theta(VORONOI)


class TestTelescoping:
    def test_cube_without_margin(self, fcc_bounds):
        with pytest.raises(BoundsError):
            fcc_bounds.verify_telescoping(VORONOI, [12.0], translates=2)

    @pytest.mark.slow
    def test_voronoi_rows(self, fcc_bounds):
        report = fcc_bounds.verify_telescoping(VORONOI, [4.0, 6.0], translates=8, seed=3)
        assert [row.side for row in report.rows] == [4.0, 6.0]
        assert len(report.ratios) == 1
        for row in report.rows:
            assert row.vertices > 0
            assert row.score_sum == pytest.approx(0.0, abs=1e-6)
            assert abs(row.interior_identity_gap) <= 1e-7
