"""
Testes de geração, validação e E/S de empacotamentos.
"""

import math

import numpy as np
import pytest
from structlog.testing import capture_logs

from kepler.models.packing import Box, Packing, PackingKind
from kepler.services.packing import (
    MAX_QUERY_RADIUS,
    NeighborIndex,
    PackingError,
    PackingGenerator,
    PackingValidationError,
    PackingValidator,
    fcc_cell_volume,
    gen_dodecahedral,
    gen_fcc,
    gen_pentagonal_prism,
    gen_random_saturated,
    interior_vertices,
    is_interior,
    load_packing,
    save_packing,
)

from .conftest import TEST_MARGIN, origin_index

FAST_VALIDATOR = PackingValidator(max_grid_points=200_000)


class TestLattices:
    def test_fcc_minimum_distance(self, fcc):
        report = FAST_VALIDATOR.validate(fcc)
        assert report.min_distance == pytest.approx(2.0, abs=1e-12)
        assert report.valid
        assert report.max_gap < 2.0

    def test_fcc_kissing_number(self, fcc):
        index = NeighborIndex(fcc)
        assert len(index.neighbors(origin_index(fcc), 2.0 + 1e-9)) == 12

    def test_hcp_is_valid(self, hcp):
        report = FAST_VALIDATOR.validate(hcp)
        assert report.min_distance == pytest.approx(2.0, abs=1e-9)
        assert report.valid

    def test_hcp_kissing_number(self, hcp):
        index = NeighborIndex(hcp)
        assert len(index.neighbors(origin_index(hcp), 2.0 + 1e-9)) == 12

    def test_block_domain_leaves_room_for_margin(self, fcc):
        assert fcc.kind == PackingKind.FCC
        assert fcc.domain.boundary_distance(np.zeros((1, 3)))[0] > TEST_MARGIN
        assert is_interior(fcc, origin_index(fcc), TEST_MARGIN)

    @pytest.mark.parametrize("shells", [0, 1])
    def test_too_few_shells(self, shells):
        with pytest.raises(PackingError):
            gen_fcc(shells, margin=TEST_MARGIN)
        with pytest.raises(PackingError):
            PackingGenerator(margin=TEST_MARGIN).gen_hcp(shells)

    def test_fcc_cell_volume(self):
        assert fcc_cell_volume() == pytest.approx(4.0 * math.sqrt(2.0))


class TestLocalConfigurations:
    def test_dodecahedral_neighbors_touch_center(self):
        p = gen_dodecahedral()
        assert p.size == 13
        assert not p.saturated
        np.testing.assert_allclose(np.linalg.norm(p.centers[1:], axis=1), 2.0, atol=1e-12)
        assert FAST_VALIDATOR.validate(p).valid

    def test_pentagonal_prism(self):
        p = gen_pentagonal_prism()
        assert p.kind == PackingKind.PENTAGONAL_PRISM
        np.testing.assert_allclose(np.linalg.norm(p.centers[1:], axis=1), 2.0, atol=1e-12)
        assert FAST_VALIDATOR.validate(p).min_distance >= 2.0 - 1e-12

    def test_only_origin_is_interior(self):
        np.testing.assert_array_equal(interior_vertices(gen_dodecahedral()), [0])


class TestValidation:
    def test_close_pair_is_reported(self):
        p = Packing(centers=[[0.0, 0.0, 0.0], [1.9, 0.0, 0.0]], domain=Box.cube([0, 0, 0], 1.0), saturated=False)
        report = FAST_VALIDATOR.validate(p)
        assert not report.valid
        assert len(report.distance_violations) == 1
        assert report.distance_violations[0].distance == pytest.approx(1.9)
        assert not report.saturation_checked

    def test_strict_raises(self):
        p = Packing(centers=[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]], domain=Box.cube([0, 0, 0], 1.0), saturated=False)
        with pytest.raises(PackingValidationError) as excinfo:
            FAST_VALIDATOR.validate(p, strict=True)
        assert not excinfo.value.report.valid

    def test_lonely_center_leaves_holes(self):
        p = Packing(centers=[[0.0, 0.0, 0.0]], domain=Box.cube([0, 0, 0], 10.0))
        report = FAST_VALIDATOR.validate(p)
        assert report.holes
        assert all(h.distance >= 2.0 for h in report.holes)
        assert report.max_gap == pytest.approx(5.0 * math.sqrt(3.0), rel=1e-3)

    def test_non_finite_centers_rejected(self):
        with pytest.raises(ValueError):
            Packing(centers=[[0.0, float("nan"), 0.0]], domain=Box.cube([0, 0, 0], 1.0))


class TestRandomPackings:
    def test_box_too_small(self):
        with pytest.raises(PackingError):
            gen_random_saturated(Box.cube([0, 0, 0], 6.0), seed=1)

    def test_flat_cloud_falls_back_to_corners(self):
        centers = np.array([[0.0, 0.0, 0.0], [2.0, 0.0, 0.0], [0.0, 2.0, 0.0], [2.0, 2.0, 0.0]])
        with capture_logs() as logs:
            holes = PackingGenerator()._holes(centers, Box.cube([0, 0, 0], 20.0))
        failures = [entry for entry in logs if entry["event"] == "hole_triangulation_failed"]
        assert len(failures) == 1
        assert failures[0]["log_level"] == "warning"
        assert len(holes) == 8
        assert all(distance >= 2.0 for distance, _ in holes)

    @pytest.mark.slow
    def test_deterministic_and_saturated(self):
        box = Box.cube([0, 0, 0], 8.0)
        first = gen_random_saturated(box, seed=7)
        second = gen_random_saturated(box, seed=7)
        np.testing.assert_array_equal(first.centers, second.centers)
        report = FAST_VALIDATOR.validate(first)
        assert report.valid, report.holes


class TestNeighborIndex:
    def test_matches_brute_force(self, fcc):
        index = NeighborIndex(fcc)
        rng = np.random.default_rng(3)
        for point in rng.uniform(-6.0, 6.0, size=(20, 3)):
            np.testing.assert_array_equal(index.within(point, 4.5), index.brute_force_within(point, 4.5))

    def test_radius_limit(self, fcc):
        with pytest.raises(PackingError):
            NeighborIndex(fcc).within(np.zeros(3), MAX_QUERY_RADIUS + 1.0)

    def test_empty_packing(self):
        index = NeighborIndex(Packing(centers=np.zeros((0, 3)), domain=Box.cube([0, 0, 0], 1.0)))
        assert index.within(np.zeros(3), 3.0).size == 0
        with pytest.raises(PackingError):
            index.nearest(np.zeros(3))


class TestPersistence:
    def test_save_and_load(self, tmp_path):
        p = gen_pentagonal_prism()
        path = tmp_path / "prism.json"
        save_packing(p, str(path))
        loaded = load_packing(str(path))
        np.testing.assert_allclose(loaded.centers, p.centers)
        assert loaded.domain == p.domain
        assert loaded.kind == p.kind
        assert loaded.saturated is False

    def test_invalid_file(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{"centers": [[0, 0]]}', encoding="utf-8")
        with pytest.raises(PackingError):
            load_packing(str(path))
