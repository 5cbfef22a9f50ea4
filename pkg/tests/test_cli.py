"""
Testes da interface de linha de comando.
"""

import json
import math

import pytest

from kepler.cli import EXIT_CHECK_FAILED, EXIT_ERROR, EXIT_OK, run
from kepler.core.config import settings
from kepler.models.scoring import Constants
from kepler.services.packing import load_packing, save_packing

from .conftest import TEST_MARGIN

MARGIN = ["--margin", str(TEST_MARGIN)]


def run_json(argv, capsys):
    code = run(argv)
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


@pytest.fixture(scope="module")
def fcc_file(tmp_path_factory, fcc):
    path = tmp_path_factory.mktemp("inputs") / "fcc.json"
    save_packing(fcc, str(path))
    return path


class TestGen:
    def test_fcc_block(self, tmp_path, capsys):
        code, payload = run_json(
            ["gen", "--lattice", "fcc", "--shells", "2", *MARGIN, "--no-validate", "-o", str(tmp_path)], capsys
        )
        assert code == EXIT_OK
        assert payload["command"] == "gen"
        assert payload["summary"]["interior"] > 0
        packing = load_packing(str(tmp_path / "packing.json"))
        assert packing.size == payload["summary"]["size"]

        manifest = json.loads((tmp_path / "manifest.json").read_text(encoding="utf-8"))
        assert manifest["exit_code"] == EXIT_OK
        assert manifest["config"]["options"] == {"lattice": "fcc", "shells": 2}
        assert "packing.json" in manifest["outputs"]

    def test_dodecahedral_is_validated(self, tmp_path, capsys):
        code, payload = run_json(["gen", "--lattice", "dodeca", "-o", str(tmp_path)], capsys)
        assert code == EXIT_OK
        assert payload["summary"]["valid"]
        assert payload["summary"]["min_distance"] == pytest.approx(2.0, abs=1e-9)
        assert (tmp_path / "validation.json").is_file()

    def test_too_few_shells(self, tmp_path, capsys):
        code, payload = run_json(["gen", "--lattice", "hcp", "--shells", "1", "-o", str(tmp_path)], capsys)
        assert code == EXIT_ERROR
        assert payload is None


class TestScore:
    def test_single_vertex(self, fcc_file, tmp_path, capsys):
        code, payload = run_json(
            ["score", "-i", str(fcc_file), *MARGIN, "--max-vertices", "1", "--threads", "1", "-o", str(tmp_path)],
            capsys,
        )
        assert code == EXIT_OK
        assert payload["summary"]["vertices"] == 1
        hf = payload["summary"]["schemes"]["hf"]
        assert hf["max_score"] == pytest.approx(8.0 * Constants.PT, abs=1e-8)
        assert (tmp_path / "stars_hf.json").is_file()
        assert (tmp_path / "clusters_hf.json").is_file()

    def test_csv_tables(self, fcc_file, tmp_path, capsys):
        code, _ = run_json(
            [
                "score", "-i", str(fcc_file), *MARGIN, "--max-vertices", "1",
                "--scheme", "voronoi", "--regions", "--csv", "-o", str(tmp_path),
            ],
            capsys,
        )
        assert code == EXIT_OK
        assert (tmp_path / "stars_voronoi.csv").is_file()
        assert (tmp_path / "regions_voronoi.csv").is_file()

    def test_missing_input(self, tmp_path, capsys):
        code, payload = run_json(["score", "-i", str(tmp_path / "nada.json"), "-o", str(tmp_path)], capsys)
        assert code == EXIT_ERROR
        assert payload is None


class TestBound:
    def test_voronoi_bound(self, fcc_file, tmp_path, capsys):
        code, payload = run_json(
            ["bound", "-i", str(fcc_file), *MARGIN, "--scheme", "voronoi", "-o", str(tmp_path)], capsys
        )
        assert code == EXIT_OK
        (label,) = payload["summary"]["bounds"]
        assert label.startswith("voronoi(B=")
        assert payload["summary"]["bounds"][label] == pytest.approx(math.pi / math.sqrt(18.0), abs=1e-9)
        assert payload["summary"]["reference"] == pytest.approx(math.pi / math.sqrt(18.0), abs=1e-11)


class TestOverrides:
    def test_overrides_are_restored(self, fcc_file, tmp_path, capsys):
        seed, margin = settings.seed, settings.interior_margin
        code, _ = run_json(
            ["bound", "-i", str(fcc_file), *MARGIN, "--seed", "99", "--set", "fejes_toth_t=0.05", "-o", str(tmp_path)],
            capsys,
        )
        assert code == EXIT_OK
        manifest = json.loads((tmp_path / "manifest.json").read_text(encoding="utf-8"))
        assert manifest["config"]["seed"] == 99
        assert manifest["config"]["overrides"]["fejes_toth_t"] == 0.05
        assert settings.seed == seed
        assert settings.interior_margin == margin

    @pytest.mark.parametrize("override", ["nao_existe=1", "sem_igual", "seed=-4"])
    def test_bad_override(self, fcc_file, tmp_path, capsys, override):
        seed = settings.seed
        code, _ = run_json(["bound", "-i", str(fcc_file), "--set", override, "-o", str(tmp_path)], capsys)
        assert code == EXIT_ERROR
        assert settings.seed == seed

    def test_unknown_command(self, capsys):
        assert run(["desconhecido"]) == EXIT_ERROR


class TestVerify:
    def test_local_configuration_runs_packing_independent_checks(self, tmp_path, capsys):
        run(["gen", "--lattice", "dodeca", "--no-validate", "-o", str(tmp_path / "gen")])
        capsys.readouterr()
        code, payload = run_json(
            [
                "verify", "-i", str(tmp_path / "gen" / "packing.json"),
                "--sweep-samples", "20", "-o", str(tmp_path / "verify"),
            ],
            capsys,
        )
        assert code == EXIT_OK
        assert payload["summary"]["failures"] == 0
        assert set(payload["summary"]["checks"]) == {"dodecahedral", "sweep_qr", "sweep_ql"}

    @pytest.mark.slow
    def test_fcc_single_vertex(self, fcc_file, tmp_path, capsys):
        code, payload = run_json(
            [
                "verify", "-i", str(fcc_file), *MARGIN, "--max-vertices", "1",
                "--sweep-samples", "50", "--oracle-pieces", "4", "--mc-samples", "100000",
                "--coverage-samples", "20000", "-o", str(tmp_path),
            ],
            capsys,
        )
        assert code in (EXIT_OK, EXIT_CHECK_FAILED)
        checks = payload["summary"]["checks"]
        assert checks["d_system"]
        assert checks["hf_score_bound"]
        assert checks["admissibility_hf"]
        if code == EXIT_CHECK_FAILED:
            assert (tmp_path / "failures.json").is_file()
