"""
Testes de compressão, vor, regras HF e dos esquemas de pontuação.
"""

import math

import numpy as np
import pytest

from kepler.models.decomposition import AdmittingRule, DTetra, SimplexKind, VCell
from kepler.models.scoring import Branch, Constants, SchemeName, ScoreScheme
from kepler.services.geometry import (
    ball_polytope_volume,
    barycentric,
    circumcenter,
    make_tetra,
    rogers_pieces,
    tetra_from_lengths,
)
from kepler.services.scoring import (
    LocalityError,
    RuleClassificationError,
    SimplexKindError,
    compression_sweep,
    dodecahedral_density_check,
    eta_plus,
    mu,
    score_hf,
    spine_of,
    tetra_compression,
    vor,
    vor_trunc,
    voronoi_piece,
)

from .conftest import origin_index

PT = Constants.PT
HF = ScoreScheme(name=SchemeName.HF)
VORONOI = ScoreScheme(name=SchemeName.VORONOI)
FEJES_TOTH = ScoreScheme(name=SchemeName.FEJES_TOTH)
HSIANG = ScoreScheme(name=SchemeName.HSIANG)
DELAUNAY = ScoreScheme(name=SchemeName.HALES_DELAUNAY)


def flat_tetra():
    """Base de lado 2.5 e ápice a distância 2: circuncentro do lado de fora da base."""
    r = 2.5 / math.sqrt(3.0)
    h = math.sqrt(4.0 - r * r)
    base = [[r * math.cos(a), r * math.sin(a), 0.0] for a in (0.0, 2.0 * math.pi / 3.0, 4.0 * math.pi / 3.0)]
    return make_tetra(base + [[0.0, 0.0, h]], indices=(0, 1, 2, 3))


def quarter_region(ql_quarter, isolated=False, in_q_octahedron=False):
    return DTetra(
        tetra=ql_quarter,
        kind=SimplexKind.QL,
        rule=AdmittingRule.QL0 if isolated else AdmittingRule.QL2,
        spine=(0, 1),
        isolated=isolated,
        in_q_octahedron=in_q_octahedron,
    )


class TestConstants:
    def test_values(self):
        assert Constants.DELTA_OCT == pytest.approx(0.720903, abs=1e-6)
        assert PT == pytest.approx(0.0553736, abs=1e-7)
        assert Constants.FCC_DENSITY == pytest.approx(0.7404805, abs=1e-7)
        assert Constants.DODECAHEDRAL_DENSITY == pytest.approx(0.754697, abs=1e-6)

    def test_scheme_defaults(self):
        assert VORONOI.b_const == pytest.approx(Constants.FCC_DENSITY)
        assert FEJES_TOTH.t_param == pytest.approx(0.0534)
        assert HF.a_const == 4.0
        assert HF.b_const == pytest.approx(4.0 * Constants.DELTA_OCT)
        assert FEJES_TOTH.label == "fejes_toth(t=0.0534)"
        assert HSIANG.label == "hsiang"


class TestCompression:
    def test_regular_tetra(self, regular_tetra):
        assert tetra_compression(regular_tetra) == pytest.approx(PT, abs=1e-10)

    def test_octahedron_quarter(self, ql_quarter):
        assert tetra_compression(ql_quarter) == pytest.approx(0.0, abs=1e-10)

    def test_sweeps_stay_below_extremals(self):
        assert compression_sweep("qr", 300, seed=11).passed
        assert compression_sweep("ql", 300, seed=11).passed

    def test_unknown_sweep(self):
        with pytest.raises(SimplexKindError):
            compression_sweep("xx", 10)

    def test_dodecahedral_density(self):
        check = dodecahedral_density_check()
        assert check.passed
        assert check.value == pytest.approx(0.754697, abs=1e-5)


class TestVor:
    @pytest.mark.parametrize("vertex", [0, 1, 2, 3])
    def test_regular_tetra(self, regular_tetra, vertex):
        assert vor(regular_tetra, vertex) == pytest.approx(PT, abs=1e-10)

    def test_vor_sums_to_four_gammas_when_centered(self):
        t = tetra_from_lengths([2.1, 2.2, 2.05, 2.15, 2.0, 2.25])
        assert sum(vor(t, i) for i in range(4)) == pytest.approx(4.0 * tetra_compression(t), abs=1e-10)

    def test_truncation_beyond_circumradius(self, regular_tetra):
        assert vor_trunc(regular_tetra, 0, radius=1.3) == pytest.approx(PT, abs=1e-10)

    def test_zero_radius(self, regular_tetra):
        assert vor_trunc(regular_tetra, 0, radius=0.0) == 0.0

    def test_centered_truncation_matches_voronoi_piece(self):
        t = tetra_from_lengths([2.1, 2.2, 2.05, 2.15, 2.0, 2.25])
        apex = t.vertices[0]
        piece = voronoi_piece(t, 0)
        expected = 4.0 * (
            ball_polytope_volume(piece, apex, 1.0)
            - Constants.DELTA_OCT * ball_polytope_volume(piece, apex, Constants.TRUNCATION_RADIUS)
        )
        assert vor_trunc(t, 0, radius=Constants.TRUNCATION_RADIUS) == pytest.approx(expected, abs=1e-9)

    @pytest.mark.parametrize("vertex", [0, 1, 2, 3])
    def test_signed_pieces_beyond_circumradius(self, vertex):
        t = flat_tetra()
        assert any(sign < 0 for sign, _ in rogers_pieces(t, 0))
        _, radius = circumcenter(t)
        assert vor_trunc(t, vertex, radius=radius + 0.01) == pytest.approx(vor(t, vertex), abs=1e-9)

    def test_circumcenter_beyond_opposite_face(self):
        t = tetra_from_lengths([2.0, 2.0, 2.0, 3.2, 3.2, 3.2])
        center, radius = circumcenter(t)
        assert barycentric(t, center[None, :])[0, 0] < 0.0
        assert all(sign >= 0.0 for sign, _ in rogers_pieces(t, 0))
        value = vor_trunc(t, 0, radius=radius + 0.01)
        assert value == pytest.approx(vor(t, 0), abs=1e-9)
        assert value == pytest.approx(-4.036274, abs=1e-5)


class TestMu:
    def test_spine_detection(self, ql_quarter, regular_tetra):
        assert spine_of(ql_quarter) == (0, 1)
        with pytest.raises(SimplexKindError):
            spine_of(regular_tetra)

    def test_eta_plus_of_quarter(self, ql_quarter):
        assert eta_plus(ql_quarter) == pytest.approx(math.sqrt(2.0), abs=1e-12)

    def test_small_eta_uses_compression(self, ql_quarter):
        assert mu(ql_quarter, 2) == pytest.approx(tetra_compression(ql_quarter), abs=1e-12)

    def test_large_eta_uses_vor(self):
        t = tetra_from_lengths([2.8, 2.4, 2.0, 2.0, 2.4, 2.45])
        assert eta_plus(t) > math.sqrt(2.0)
        assert mu(t, 2) == pytest.approx(vor(t, 2), abs=1e-12)


class TestHfRules:
    def test_v_cell_weight(self):
        cell = VCell(owner=3, volume=1.0, covered_volume=0.8, voronoi_volume=2.0)
        own = score_hf(cell, 3)
        assert own.rule == "S1"
        assert own.weight == pytest.approx(4.0 * (0.8 - Constants.DELTA_OCT))
        assert score_hf(cell, 4).weight == 0.0

    def test_small_qr(self, regular_tetra):
        t = make_tetra(regular_tetra.vertices, indices=(5, 6, 7, 8))
        region = DTetra(tetra=t, kind=SimplexKind.QR, rule=AdmittingRule.QR)
        score = score_hf(region, 7)
        assert score.rule == "S2"
        assert score.branch == Branch.GAMMA
        assert score.weight == pytest.approx(PT, abs=1e-10)

    def test_large_qr_uses_vor(self):
        t = tetra_from_lengths([2.5, 2.5, 2.5, 2.5, 2.5, 2.4])
        t = make_tetra(t.vertices, indices=(0, 1, 2, 3))
        score = score_hf(DTetra(tetra=t, kind=SimplexKind.QR, rule=AdmittingRule.QR), 0)
        assert score.branch == Branch.VOR
        assert score.weight == pytest.approx(vor(t, 0), abs=1e-12)

    def test_anchor_of_quarter(self, ql_quarter):
        score = score_hf(quarter_region(ql_quarter), 2)
        assert score.rule == "S3"
        assert score.weight == pytest.approx(0.0, abs=1e-10)

    def test_isolated_spine_endpoint(self, ql_quarter):
        assert score_hf(quarter_region(ql_quarter, isolated=True), 0).rule == "S4:isolated"

    def test_octahedron_spine_endpoint(self, ql_quarter):
        score = score_hf(quarter_region(ql_quarter, in_q_octahedron=True), 1)
        assert score.rule == "S4:octahedron"
        assert score.weight == pytest.approx(0.0, abs=1e-10)

    def test_shared_spine_uses_truncated_vor(self, ql_quarter):
        values = {0: 0.03, 1: 0.01}
        score = score_hf(quarter_region(ql_quarter), 0, lambda t, k: values[k])
        assert score.rule == "S4:shared"
        assert score.branch == Branch.VOR_TRUNC
        assert score.weight == pytest.approx(0.01, abs=1e-10)

    def test_shared_spine_with_negative_rogers_sign(self):
        t = tetra_from_lengths([2.8, 2.0, 2.5, 2.0, 2.5, 2.0])
        t = make_tetra(t.vertices, indices=(0, 1, 2, 3))
        assert any(sign < 0 for sign, _ in rogers_pieces(t, 0))
        region = quarter_region(t)
        score = score_hf(region, 0)
        assert score.rule == "S4:shared"
        assert score.weight == pytest.approx(mu(t, 0), abs=1e-9)
        total = sum(score_hf(region, v).weight for v in range(4))
        assert total == pytest.approx(4.0 * tetra_compression(t), abs=1e-9)

    def test_shared_weights_cancel(self, ql_quarter):
        region = quarter_region(ql_quarter)
        total = sum(score_hf(region, v).weight for v in range(4))
        assert total == pytest.approx(4.0 * tetra_compression(ql_quarter), abs=1e-9)

    def test_vertex_outside_region(self, regular_tetra):
        t = make_tetra(regular_tetra.vertices, indices=(0, 1, 2, 3))
        with pytest.raises(RuleClassificationError):
            score_hf(DTetra(tetra=t, kind=SimplexKind.QR, rule=AdmittingRule.QR), 9)


class TestFccStars:
    def test_hf_star(self, fcc_scorer, fcc_vertex):
        star = fcc_scorer.score_star(fcc_vertex, HF)
        assert star.total == pytest.approx(8.0 * PT, abs=1e-8)
        assert len(star.clusters) == 14
        assert star.cluster_total == pytest.approx(star.total, abs=1e-8)
        triangles = [c.score for c in star.clusters if c.sides == 3]
        np.testing.assert_allclose(triangles, PT, atol=1e-8)

    def test_voronoi_star(self, fcc_scorer, fcc_vertex):
        assert fcc_scorer.score_star(fcc_vertex, VORONOI).total == pytest.approx(0.0, abs=1e-9)

    def test_fejes_toth_star(self, fcc_scorer, fcc_vertex):
        star = fcc_scorer.score_star(fcc_vertex, FEJES_TOTH)
        assert star.neighbor_count == 12
        assert star.self_weight == pytest.approx(0.0)
        assert star.total == pytest.approx(0.0, abs=1e-9)

    def test_hsiang_star(self, fcc_scorer, fcc_vertex):
        star = fcc_scorer.score_star(fcc_vertex, HSIANG)
        assert star.neighbor_count == 12
        assert star.self_weight == pytest.approx(1.0 / 13.0)
        assert star.total == pytest.approx(0.0, abs=1e-9)

    def test_delaunay_star(self, fcc_scorer, fcc_vertex):
        star = fcc_scorer.score_star(fcc_vertex, DELAUNAY)
        assert star.total == pytest.approx(8.0 * PT, abs=1e-8)

    def test_translated_star_comes_from_cache(self, fcc, fcc_scorer, fcc_vertex):
        first = fcc_scorer.score_star(fcc_vertex, VORONOI)
        offset = np.array([math.sqrt(2.0), math.sqrt(2.0), 0.0])
        other = int(np.argmin(np.linalg.norm(fcc.centers - offset, axis=1)))
        second = fcc_scorer.score_star(other, VORONOI)
        assert second.cached
        assert second.vertex == other
        assert second.regions[0].region == f"voronoi_cell:{other}"
        assert second.total == pytest.approx(first.total, abs=1e-12)

    def test_boundary_vertex_is_rejected(self, fcc, fcc_scorer):
        far = int(np.argmax(np.linalg.norm(fcc.centers, axis=1)))
        with pytest.raises(LocalityError):
            fcc_scorer.score_star(far, HF)

    def test_summary(self, fcc_scorer, fcc_vertex):
        stars = fcc_scorer.score_vertices(HF, [fcc_vertex])
        summary = fcc_scorer.summarize(stars, HF)
        assert summary.vertices == 1
        assert summary.argmax_vertex == fcc_vertex
        assert summary.max_score == pytest.approx(8.0 * PT, abs=1e-8)
        assert summary.extras["max_triangle_cluster"] == pytest.approx(PT, abs=1e-8)

    def test_hcp_hf_star(self, hcp, hcp_scorer):
        star = hcp_scorer.score_star(origin_index(hcp), HF)
        assert star.total == pytest.approx(8.0 * PT, abs=1e-8)


class TestChecks:
    @pytest.mark.parametrize("scheme", [HF, VORONOI, FEJES_TOTH, HSIANG, DELAUNAY], ids=lambda s: s.label)
    def test_admissibility_at_fcc(self, fcc_scorer, fcc_vertex, scheme):
        report = fcc_scorer.check_admissibility(scheme, [fcc_vertex])
        assert report.passed, report.failures
        assert report.regions_checked > 0

    def test_hf_admissibility_counts_d_tetras_only(self, fcc_scorer, fcc_vertex):
        report = fcc_scorer.check_admissibility(HF, [fcc_vertex])
        assert report.regions_checked == len(fcc_scorer.decomposer.d_tetras_at(fcc_vertex))
        assert report.locality_radius > 0.0

    def test_no_negative_self_weights_at_fcc(self, fcc_scorer, fcc_vertex):
        assert fcc_scorer.negative_self_weights(vertices=[fcc_vertex]) == []

    def test_large_t_gives_negative_self_weight(self, fcc_scorer, fcc_vertex):
        found = fcc_scorer.negative_self_weights(t=0.9, vertices=[fcc_vertex])
        assert len(found) == 1
        assert found[0].neighbors == 18
        assert found[0].self_weight == pytest.approx(-0.5)

    def test_oracle_agreement(self, fcc_scorer, fcc_vertex):
        results = fcc_scorer.oracle_agreement(pieces=4, samples=100_000, vertices=[fcc_vertex])
        assert len(results) == 4
        assert all(r.passed for r in results), [r.subject for r in results if not r.passed]

    @pytest.mark.slow
    def test_decoupling_and_truncation(self, fcc_scorer, fcc_vertex):
        report = fcc_scorer.check_decoupling_truncation(fcc_vertex)
        assert report.passed
        assert sum(1 for f in report.faces if f.checked) == 14
