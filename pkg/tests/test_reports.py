"""
Testes dos relatórios JSON/CSV e do manifesto de execução.
"""

import json

import numpy as np
import pandas as pd
import pytest

from kepler.models.run import CheckFailure, Command, RunConfig
from kepler.models.scoring import Branch, ClusterScore, RegionScore, SchemeName, ScoreScheme, StarScore
from kepler.services.reports import (
    ReportWriter,
    cluster_rows,
    region_rows,
    round_floats,
    sha256_of,
    star_rows,
)


def sample_stars():
    return [
        StarScore(
            vertex=7,
            scheme="hsiang",
            total=-0.25,
            regions=[RegionScore(region="7", weight=-0.25, branch=Branch.VORONOI_CELL)],
            neighbor_count=12,
            self_weight=-0.25,
        ),
        StarScore(
            vertex=3,
            scheme="hf",
            total=0.1,
            regions=[
                RegionScore(region="0-1-2-3", weight=0.04, branch=Branch.GAMMA, rule="S1"),
                RegionScore(region="1-3-4-5", weight=0.06, branch=Branch.VOR, rule="S2"),
            ],
            clusters=[ClusterScore(face_index=0, sides=3, score=0.04), ClusterScore(face_index=1, sides=4, score=0.06)],
        ),
    ]


class TestRoundFloats:
    def test_twelve_significant_digits(self):
        assert round_floats(1.0 / 3.0) == 0.333333333333
        assert round_floats({"x": [2.0 / 3.0, 5]}) == {"x": [0.666666666667, 5]}

    def test_non_finite_become_null(self):
        assert round_floats([float("nan"), float("inf"), 1.5]) == [None, None, 1.5]

    def test_numpy_values(self):
        assert round_floats(np.array([[0.1, np.pi]])) == [[0.1, 3.14159265359]]
        assert type(round_floats(np.int64(4))) is int
        assert type(round_floats(np.float64(0.5))) is float

    def test_models_are_dumped(self):
        failure = CheckFailure(check="oracle", subject="0-1-2-3", detail="fora", value=np.pi)
        assert round_floats(failure)["value"] == 3.14159265359


class TestRows:
    def test_star_rows_sorted_by_vertex(self):
        rows = star_rows(sample_stars())
        assert [r["vertex"] for r in rows] == [3, 7]
        assert rows[0]["clusters"] == 2
        assert rows[0]["max_cluster"] == 0.06
        assert "neighbor_count" not in rows[0]
        assert rows[1]["neighbor_count"] == 12
        assert rows[1]["self_weight"] == -0.25

    def test_region_and_cluster_rows(self):
        regions = region_rows(sample_stars())
        assert len(regions) == 3
        assert regions[1]["branch"] == "vor"
        assert regions[1]["rule"] == "S2"
        assert [c["sides"] for c in cluster_rows(sample_stars())] == [3, 4]

    def test_fcc_star_rows(self, fcc_scorer, fcc_vertex):
        star = fcc_scorer.score_star(fcc_vertex, ScoreScheme(name=SchemeName.HF))
        (row,) = star_rows([star])
        assert row["clusters"] == 14
        assert row["total"] == pytest.approx(star.total)


class TestReportWriter:
    def test_json_digest_is_recorded(self, tmp_path):
        writer = ReportWriter(tmp_path / "out")
        path = writer.write_json("data.json", {"b": 1.0 / 7.0, "a": [np.float64(2.5)]})
        payload = json.loads(path.read_text(encoding="utf-8"))
        assert payload == {"a": [2.5], "b": 0.142857142857}
        assert writer.outputs == {"data.json": sha256_of(path)}

    def test_csv_tables(self, tmp_path):
        writer = ReportWriter(tmp_path)
        path = writer.write_table("stars", star_rows(sample_stars()), csv=True)
        assert path.name == "stars.csv"
        frame = pd.read_csv(path)
        assert list(frame["vertex"]) == [3, 7]
        assert frame["total"].tolist() == pytest.approx([0.1, -0.25])

    def test_json_tables(self, tmp_path):
        writer = ReportWriter(tmp_path)
        path = writer.write_table("regions", region_rows(sample_stars()), csv=False)
        assert path.name == "regions.json"
        assert len(json.loads(path.read_text(encoding="utf-8"))) == 3

    def test_manifest(self, tmp_path):
        source = tmp_path / "input.json"
        source.write_text("{}", encoding="utf-8")
        writer = ReportWriter(tmp_path / "run")
        writer.write_json("result.json", {"ok": True})
        failure = CheckFailure(check="coverage", subject="fcc", detail="amostras sem peça", value=0.01)
        config = RunConfig(command=Command.GEN, seed=1, mc_samples=10)
        path = writer.write_manifest(config, inputs=[source], exit_code=2, failures=[failure])

        manifest = json.loads(path.read_text(encoding="utf-8"))
        assert manifest["config"]["command"] == "gen"
        assert manifest["config"]["seed"] == 1
        assert manifest["exit_code"] == 2
        assert manifest["failures"][0]["check"] == "coverage"
        assert manifest["inputs"] == {str(source): sha256_of(source)}
        assert set(manifest["outputs"]) == {"result.json"}
        assert "numpy" in manifest["versions"]
        assert "seed" in manifest["settings"]

    def test_run_config_requires_a_scheme(self):
        with pytest.raises(ValueError):
            RunConfig(command=Command.SCORE, seed=1, mc_samples=10, schemes=[])
