"""
Testes do oráculo de Monte Carlo.
"""

import math

import numpy as np
import pytest
from structlog.testing import capture_logs

from kepler.models.oracle import McEstimate, OracleAgreement
from kepler.models.packing import Box
from kepler.models.scoring import Constants
from kepler.services.geometry import (
    box_halfspaces,
    halfspace_cell,
    polyhedron_from_halfspaces,
    region_from,
    tetra_polyhedron,
)
from kepler.services.oracle import MonteCarloOracle, ToleranceNotMetError, derive_rng


def unit_cube():
    return polyhedron_from_halfspaces(box_halfspaces(Box(min=[0.0, 0.0, 0.0], max=[1.0, 1.0, 1.0])))


class TestEstimators:
    def test_box_volume_is_exact(self, oracle):
        estimate = oracle.mc_volume(unit_cube())
        assert estimate.value == pytest.approx(1.0)
        assert estimate.stderr == 0.0

    def test_regular_tetra_volume(self, oracle, regular_tetra):
        estimate = oracle.mc_volume(tetra_polyhedron(regular_tetra))
        assert estimate.agrees(2.0 * math.sqrt(2.0) / 3.0)

    def test_rhombic_dodecahedron_volume(self, oracle):
        s = math.sqrt(2.0)
        neighbors = []
        for x in (-s, s):
            for y in (-s, s):
                neighbors += [[x, y, 0.0], [x, 0.0, y], [0.0, x, y]]
        cell = halfspace_cell(np.zeros(3), np.array(neighbors), Box.cube([0, 0, 0], 40.0))
        assert oracle.mc_volume(cell).agrees(4.0 * math.sqrt(2.0))

    def test_octant_solid_angle(self, oracle, corner_tetra):
        assert oracle.mc_solid_angle(0, corner_tetra).agrees(math.pi / 2.0)

    def test_inscribed_ball(self, oracle):
        cube = polyhedron_from_halfspaces(box_halfspaces(Box.cube([0, 0, 0], 2.0)))
        assert oracle.mc_covered_volume(cube, np.zeros((1, 3))).agrees(4.0 * math.pi / 3.0)

    def test_regular_tetra_compression(self, oracle, regular_tetra):
        region = region_from([tetra_polyhedron(regular_tetra)])
        estimate = oracle.mc_compression(region, regular_tetra.vertices)
        assert estimate.agrees(Constants.PT)

    def test_empty_region(self, oracle):
        estimate = oracle.mc_volume(region_from([]))
        assert estimate.value == 0.0
        assert estimate.samples == 0


class TestDeterminism:
    def test_same_seed_same_estimate(self, regular_tetra):
        poly = tetra_polyhedron(regular_tetra)
        first = MonteCarloOracle(seed=99, samples=50_000).mc_volume(poly)
        second = MonteCarloOracle(seed=99, samples=50_000).mc_volume(poly)
        assert first == second

    def test_seed_changes_estimate(self, regular_tetra):
        poly = tetra_polyhedron(regular_tetra)
        first = MonteCarloOracle(seed=1, samples=50_000).mc_volume(poly)
        second = MonteCarloOracle(seed=2, samples=50_000).mc_volume(poly)
        assert first.value != second.value

    def test_derived_streams_are_reproducible(self):
        a = derive_rng(5, 1, 2).random(4)
        b = derive_rng(5, 1, 2).random(4)
        c = derive_rng(5, 2, 1).random(4)
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)



class TestAdaptivePrecision:
    def test_doubles_samples_until_target(self, regular_tetra):
        oracle = MonteCarloOracle(seed=3, samples=10_000)
        poly = tetra_polyhedron(regular_tetra)
        estimate = oracle.mc_to_precision(
            lambda n: oracle.mc_volume(poly, n_samples=n), target_stderr=5e-3, max_samples=1 << 20
        )
        assert estimate.stderr <= 5e-3
        assert estimate.samples > 10_000
        assert estimate.agrees(2.0 * math.sqrt(2.0) / 3.0)

    def test_sample_limit(self, regular_tetra):
        oracle = MonteCarloOracle(seed=3, samples=10_000)
        poly = tetra_polyhedron(regular_tetra)
        with capture_logs() as logs:
            with pytest.raises(ToleranceNotMetError) as excinfo:
                oracle.mc_to_precision(
                    lambda n: oracle.mc_volume(poly, n_samples=n), target_stderr=1e-9, max_samples=40_000
                )
        assert excinfo.value.estimate.samples == 40_000
        assert logs[-1]["event"] == "mc_tolerance_not_met"
        assert logs[-1]["log_level"] == "warning"


class TestPointLocation:
    def test_tiling_counts_once(self, oracle):
        halves = [
            polyhedron_from_halfspaces(box_halfspaces(Box(min=[0, 0, 0], max=[0.5, 1, 1]))),
            polyhedron_from_halfspaces(box_halfspaces(Box(min=[0.5, 0, 0], max=[1, 1, 1]))),
        ]
        counts = oracle.mc_point_location(halves, np.zeros(3), np.ones(3), 20_000)
        assert np.all(counts == 1)

    def test_gap_is_detected(self, oracle):
        piece = polyhedron_from_halfspaces(box_halfspaces(Box(min=[0, 0, 0], max=[0.5, 1, 1])))
        counts = oracle.mc_point_location([piece], np.zeros(3), np.ones(3), 20_000)
        assert 0.4 < float((counts == 0).mean()) < 0.6


class TestMcEstimate:
    def test_agreement_band(self):
        estimate = McEstimate(value=1.0, stderr=0.01, samples=100, seed=0)
        assert estimate.agrees(1.03)
        assert not estimate.agrees(1.05)
        assert estimate.interval(2.0) == pytest.approx((0.98, 1.02))

    def test_z_score_without_error(self):
        estimate = McEstimate(value=2.0, stderr=0.0, samples=10, seed=0)
        assert estimate.z_score(2.0) == 0.0
        assert estimate.z_score(1.0) == float("inf")

    def test_merge_adds_variances(self):
        parts = [
            McEstimate(value=1.0, stderr=0.3, samples=10, seed=0),
            McEstimate(value=2.0, stderr=0.4, samples=20, seed=0),
        ]
        merged = McEstimate.merge(parts, seed=0)
        assert merged.value == pytest.approx(3.0)
        assert merged.stderr == pytest.approx(0.5)
        assert merged.samples == 30

    def test_oracle_agreement(self):
        estimate = McEstimate(value=0.5, stderr=0.01, samples=100, seed=0)
        assert OracleAgreement(subject="x", analytic=0.52, estimate=estimate).passed
        assert not OracleAgreement(subject="x", analytic=0.6, estimate=estimate).passed
