"""
Testes da configuração e do logging estruturado.
"""

import math

import pytest
from structlog.testing import capture_logs

from kepler.core.config import Settings, settings
from kepler.core.logging import LoggerMixin, log_anomaly_event, log_check_event, log_pipeline_event
from kepler.models.scoring import Constants


class TestSettings:
    def test_defaults(self, monkeypatch):
        for name in ("KEPLER_SEED", "KEPLER_MC_SAMPLES", "KEPLER_THREADS", "KEPLER_STAR_RADIUS"):
            monkeypatch.delenv(name, raising=False)
        defaults = Settings(_env_file=None)
        assert defaults.seed == 20240601
        assert defaults.mc_samples == 1_000_000
        assert defaults.mc_target_stderr == 1e-5
        assert defaults.mc_max_samples == 1 << 24
        assert defaults.threads == 4
        assert defaults.star_radius == pytest.approx(6.0 * math.sqrt(2.0) + 4.0)
        assert defaults.interior_margin == pytest.approx(Constants.V_CELL_LOCALITY)
        assert defaults.fejes_toth_t == 0.0534
        assert defaults.truncation_radius == Constants.TRUNCATION_RADIUS

    def test_environment_variables(self, monkeypatch):
        monkeypatch.setenv("KEPLER_SEED", "7")
        monkeypatch.setenv("KEPLER_MC_SAMPLES", "5000")
        loaded = Settings(_env_file=None)
        assert loaded.seed == 7
        assert loaded.mc_samples == 5000

    def test_invalid_environment_value(self, monkeypatch):
        monkeypatch.setenv("KEPLER_THREADS", "0")
        with pytest.raises(ValueError):
            Settings(_env_file=None)

    def test_runtime_override(self, restore_settings):
        restore_settings.seed = 5
        assert settings.seed == 5


class TestLogging:
    def test_pipeline_event(self):
        with capture_logs() as logs:
            log_pipeline_event("star_scored", stage="score", vertex=3)
        assert logs == [{"event": "star_scored", "stage": "score", "vertex": 3, "log_level": "info"}]

    def test_failed_check_is_a_warning(self):
        with capture_logs() as logs:
            log_check_event("coverage_done", check="coverage", passed=True)
            log_check_event("coverage_done", check="coverage", passed=False, rate=0.1)
        assert [entry["log_level"] for entry in logs] == ["info", "warning"]
        assert logs[1]["rate"] == 0.1

    def test_anomaly_event(self):
        with capture_logs() as logs:
            log_anomaly_event("non_simple_face", kind="planar_map", vertex=9)
        assert logs[0]["kind"] == "planar_map"
        assert logs[0]["log_level"] == "warning"

    def test_logger_mixin(self):
        class Worker(LoggerMixin):
            pass

        with capture_logs() as logs:
            Worker().logger.info("started", items=2)
        assert logs == [{"event": "started", "items": 2, "log_level": "info"}]
