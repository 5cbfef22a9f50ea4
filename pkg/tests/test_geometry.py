"""
Testes das primitivas geométricas.
"""

import math

import numpy as np
import pytest

from kepler.models.packing import Box
from kepler.models.scoring import Constants
from kepler.services.geometry import (
    DegenerateGeometryError,
    GeometryError,
    UnboundedCellError,
    a_coeff,
    ball_polytope_volume,
    box_halfspaces,
    circumcenter,
    cm_volume,
    covered_volume,
    delta,
    face_circumradius,
    halfspace_cell,
    hull_polyhedron,
    make_tetra,
    polyhedron_from_halfspaces,
    region_from,
    rogers_pieces,
    rogers_shape,
    rogers_simplex,
    rogers_volume,
    solid_angle,
    subtract,
    tetra_from_lengths,
    tetra_overlap_volume,
    tetra_polyhedron,
)

REGULAR_VOLUME = 2.0 * math.sqrt(2.0) / 3.0
REGULAR_SOLID_ANGLE = math.acos(23.0 / 27.0)
BIG_BOX = Box.cube([0.0, 0.0, 0.0], 40.0)


def cube(side: float, center=(0.0, 0.0, 0.0)):
    return polyhedron_from_halfspaces(box_halfspaces(Box.cube(list(center), side)))


class TestSimplexMeasures:
    def test_regular_tetra_volume(self, regular_tetra):
        assert cm_volume(regular_tetra) == pytest.approx(REGULAR_VOLUME, abs=1e-12)

    def test_corner_simplex_volume(self, corner_tetra):
        assert cm_volume(corner_tetra) == pytest.approx(1.0 / 6.0, abs=1e-12)

    def test_coplanar_points_are_degenerate(self):
        flat = make_tetra([[0, 0, 0], [2, 0, 0], [2, 2, 0], [0, 2, 0]])
        with pytest.raises(DegenerateGeometryError):
            cm_volume(flat)

    def test_unrealizable_lengths_rejected(self):
        with pytest.raises(DegenerateGeometryError):
            tetra_from_lengths([1.0, 1.0, 1.0, 5.0, 5.0, 5.0])

    def test_tetra_from_lengths_realizes_lengths(self):
        lengths = [2.1, 2.2, 2.3, 2.4, 2.05, 2.15]
        t = tetra_from_lengths(lengths)
        np.testing.assert_allclose(t.edge_lengths, lengths, atol=1e-12)

    def test_delta_regular(self):
        assert delta(4, 4, 4, 4, 4, 4) == pytest.approx(128.0, abs=1e-9)

    def test_delta_quarter_with_long_spine(self):
        assert delta(8, 4, 4, 4, 4, 4) == pytest.approx(128.0, abs=1e-9)

    def test_delta_coplanar_square(self):
        assert delta(4, 8, 4, 4, 8, 4) == pytest.approx(0.0, abs=1e-9)

    def test_delta_matches_volume(self, regular_tetra, ql_quarter, corner_tetra):
        for t in (regular_tetra, ql_quarter, corner_tetra):
            assert delta(*t.squared_lengths) == pytest.approx(144.0 * cm_volume(t) ** 2, rel=1e-10)

    def test_a_coeff_regular(self):
        assert a_coeff(2, 2, 2, 2, 2, 2) == pytest.approx(20.0)

    def test_a_coeff_vanishes_with_first_edge(self):
        assert a_coeff(0.0, 1.0, 1.0, 1.0, 1.0, 1.0) == pytest.approx(0.0)

    @pytest.mark.parametrize("vertex", [0, 1, 2, 3])
    def test_regular_solid_angle(self, regular_tetra, vertex):
        assert solid_angle(regular_tetra, vertex) == pytest.approx(REGULAR_SOLID_ANGLE, abs=1e-12)

    def test_octant_solid_angle(self, corner_tetra):
        assert solid_angle(corner_tetra, 0) == pytest.approx(math.pi / 2.0, abs=1e-12)

    def test_solid_angle_against_oracle(self, oracle):
        t = tetra_from_lengths([2.3, 2.1, 2.45, 2.2, 2.05, 2.4])
        estimate = oracle.mc_solid_angle(2, t)
        assert estimate.agrees(solid_angle(t, 2))


class TestCircumcenters:
    def test_regular_circumradius(self, regular_tetra):
        _, radius = circumcenter(regular_tetra)
        assert radius == pytest.approx(math.sqrt(1.5), abs=1e-12)

    def test_quarter_circumcenter_at_spine_midpoint(self, ql_quarter):
        center, radius = circumcenter(ql_quarter)
        np.testing.assert_allclose(center, [0.0, 0.0, 0.0], atol=1e-12)
        assert radius == pytest.approx(math.sqrt(2.0), abs=1e-12)

    def test_corner_circumcenter(self, corner_tetra):
        center, radius = circumcenter(corner_tetra)
        np.testing.assert_allclose(center, [0.5, 0.5, 0.5], atol=1e-12)
        assert radius == pytest.approx(math.sqrt(3.0) / 2.0, abs=1e-12)

    def test_equilateral_face(self):
        p = np.array([0.0, 0.0, 0.0])
        q = np.array([2.0, 0.0, 0.0])
        r = np.array([1.0, math.sqrt(3.0), 0.0])
        assert face_circumradius(p, q, r) == pytest.approx(2.0 / math.sqrt(3.0), abs=1e-12)

    def test_right_isoceles_face(self):
        p = np.array([0.0, 0.0, 0.0])
        q = np.array([2.0, 0.0, 0.0])
        r = np.array([0.0, 2.0, 0.0])
        assert face_circumradius(p, q, r) == pytest.approx(math.sqrt(2.0), abs=1e-12)

    def test_collinear_face(self):
        with pytest.raises(DegenerateGeometryError):
            face_circumradius(np.zeros(3), np.array([1.0, 0, 0]), np.array([2.0, 0, 0]))


class TestRogers:
    def test_unit_flag_volume(self):
        s = rogers_shape(1.0, math.sqrt(2.0), math.sqrt(3.0))
        assert rogers_volume(s) == pytest.approx(1.0 / 6.0, abs=1e-12)

    def test_flat_when_b_equals_a(self):
        assert rogers_volume(rogers_shape(1.0, 1.0, 1.7)) == 0.0

    def test_regular_tetra_flag(self):
        s = rogers_shape(1.0, 2.0 / math.sqrt(3.0), math.sqrt(1.5))
        expected = math.sqrt(1.0 / 3.0) * math.sqrt(1.0 / 6.0) / 6.0
        assert rogers_volume(s) == pytest.approx(expected, abs=1e-12)
        assert cm_volume(rogers_simplex(s)) == pytest.approx(expected, abs=1e-12)

    def test_out_of_order_shape(self):
        with pytest.raises(GeometryError):
            rogers_shape(1.2, 1.1, 1.5)

    def test_pieces_of_regular_tetra(self, regular_tetra):
        pieces = rogers_pieces(regular_tetra, 0)
        assert len(pieces) == 6
        assert all(sign == 1.0 for sign, _ in pieces)
        total = sum(sign * cm_volume(make_tetra(piece)) for sign, piece in pieces)
        assert total == pytest.approx(REGULAR_VOLUME / 4.0, abs=1e-12)


class TestPolyhedra:
    def test_axis_neighbors_give_cube(self):
        neighbors = 2.0 * np.vstack([np.eye(3), -np.eye(3)])
        cell = halfspace_cell(np.zeros(3), neighbors, BIG_BOX)
        assert cell.volume == pytest.approx(8.0, abs=1e-9)
        assert not cell.clipped

    def test_rhombic_dodecahedron(self):
        s = math.sqrt(2.0)
        neighbors = []
        for x in (-s, s):
            for y in (-s, s):
                neighbors += [[x, y, 0.0], [x, 0.0, y], [0.0, x, y]]
        cell = halfspace_cell(np.zeros(3), np.array(neighbors), BIG_BOX)
        assert cell.volume == pytest.approx(4.0 * math.sqrt(2.0), abs=1e-9)
        assert cell.face_count == 12

    def test_empty_neighbor_list_is_clipped(self):
        cell = halfspace_cell(np.zeros(3), np.zeros((0, 3)), Box.cube([0, 0, 0], 4.0))
        assert cell.clipped
        assert cell.volume == pytest.approx(64.0, abs=1e-9)

    def test_unbounded_without_clip_box(self):
        with pytest.raises(UnboundedCellError):
            polyhedron_from_halfspaces(np.array([[1.0, 0.0, 0.0, 0.0]]))

    def test_tetra_polyhedron_volume(self, regular_tetra):
        assert tetra_polyhedron(regular_tetra).volume == pytest.approx(REGULAR_VOLUME, abs=1e-12)

    def test_subtract_preserves_volume(self):
        whole = cube(2.0)
        half = polyhedron_from_halfspaces(box_halfspaces(Box(min=[0, -1, -1], max=[1, 1, 1])))
        pieces = subtract(whole, half)
        assert sum(p.volume for p in pieces) == pytest.approx(4.0, abs=1e-9)

    def test_face_sharing_tetrahedra_do_not_overlap(self, regular_tetra):
        v = regular_tetra.vertices
        n = _unit_normal(v[0], v[1], v[2])
        mirrored = v[3] - 2.0 * ((v[3] - v[0]) @ n) * n
        other = make_tetra([v[0], v[1], v[2], mirrored])
        assert tetra_overlap_volume(regular_tetra, other) == 0.0
        assert tetra_overlap_volume(regular_tetra, regular_tetra) == pytest.approx(REGULAR_VOLUME, abs=1e-9)

    def test_hull_of_coplanar_points(self):
        with pytest.raises(DegenerateGeometryError):
            hull_polyhedron(np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]], dtype=float))


def _unit_normal(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    n = np.cross(b - a, c - a)
    return n / np.linalg.norm(n)


class TestBallPolytopeVolume:
    def test_inscribed_ball(self):
        assert ball_polytope_volume(cube(2.0), np.zeros(3), 1.0) == pytest.approx(4.0 * math.pi / 3.0, abs=1e-12)

    def test_ball_at_corner_is_an_octant(self):
        volume = ball_polytope_volume(cube(2.0), np.array([1.0, 1.0, 1.0]), 1.0)
        assert volume == pytest.approx(math.pi / 6.0, abs=1e-9)

    def test_ball_centered_on_face(self):
        volume = ball_polytope_volume(cube(4.0), np.array([2.0, 0.0, 0.0]), 1.0)
        assert volume == pytest.approx(2.0 * math.pi / 3.0, abs=1e-9)

    def test_far_ball(self):
        assert ball_polytope_volume(cube(2.0), np.array([5.0, 0.0, 0.0]), 1.0) == 0.0

    def test_off_center_ball_against_oracle(self, oracle):
        poly = cube(1.6)
        center = np.array([0.35, -0.2, 0.5])
        exact = ball_polytope_volume(poly, center, 1.0)
        estimate = oracle.mc_covered_volume(poly, center[None, :])
        assert estimate.agrees(exact)


class TestCoveredVolume:
    def test_cube_around_center(self):
        assert covered_volume(region_from([cube(2.0)]), np.zeros((1, 3))) == pytest.approx(4.0 * math.pi / 3.0)

    def test_disjoint_region(self):
        assert covered_volume(region_from([cube(1.0)]), np.array([[10.0, 0.0, 0.0]])) == 0.0

    def test_regular_tetra_vertex_balls(self, regular_tetra):
        region = region_from([tetra_polyhedron(regular_tetra)])
        expected = 4.0 * REGULAR_SOLID_ANGLE / 3.0
        assert covered_volume(region, regular_tetra.vertices) == pytest.approx(expected, abs=1e-9)

    def test_covered_volume_matches_oracle(self, oracle, regular_tetra):
        region = region_from([tetra_polyhedron(regular_tetra)])
        estimate = oracle.mc_covered_volume(region, regular_tetra.vertices)
        assert estimate.agrees(covered_volume(region, regular_tetra.vertices))

    def test_compression_constant_relation(self):
        assert 4.0 * REGULAR_SOLID_ANGLE / 3.0 - Constants.DELTA_OCT * REGULAR_VOLUME == pytest.approx(
            Constants.PT, abs=1e-12
        )
