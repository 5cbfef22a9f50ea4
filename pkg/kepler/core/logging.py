"""
Sistema de logging estruturado da biblioteca.
"""

import logging
import sys
from typing import Any

import structlog
from structlog.stdlib import LoggerFactory

from kepler.core.config import settings


def configure_logging(level: str | None = None) -> None:
    """
    Configura o sistema de logging estruturado.

    Os eventos vão para stderr: o stdout da CLI carrega apenas relatórios.

    Args:
        level: Nível de log; usa `settings.log_level` quando omitido
    """

    # Configurar structlog
    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.stdlib.PositionalArgumentsFormatter(),
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            structlog.processors.UnicodeDecoder(),
            structlog.processors.JSONRenderer(),
        ],
        context_class=dict,
        logger_factory=LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=True,
    )

    # Configurar logging padrão
    logging.basicConfig(
        format="%(message)s",
        stream=sys.stderr,
        level=getattr(logging, (level or settings.log_level).upper()),
    )


def get_logger(name: str) -> structlog.stdlib.BoundLogger:
    """Retorna um logger estruturado."""
    return structlog.get_logger(name)


class LoggerMixin:
    """Mixin para adicionar logging estruturado a classes."""

    @property
    def logger(self) -> structlog.stdlib.BoundLogger:
        """Retorna logger com contexto da classe."""
        return get_logger(self.__class__.__name__)


def log_pipeline_event(event: str, stage: str, **kwargs: Any) -> None:
    """Log estruturado para etapas do pipeline (geração, decomposição, pontuação)."""
    logger = get_logger("pipeline")
    logger.info(event, stage=stage, **kwargs)


def log_check_event(event: str, check: str, passed: bool, **kwargs: Any) -> None:
    """Log estruturado para verificações de invariantes."""
    logger = get_logger("checks")
    if passed:
        logger.info(event, check=check, passed=passed, **kwargs)
    else:
        logger.warning(event, check=check, passed=passed, **kwargs)


def log_anomaly_event(event: str, kind: str, **kwargs: Any) -> None:
    """Log estruturado para anomalias geométricas (lemas falseados numericamente)."""
    logger = get_logger("anomalies")
    logger.warning(event, kind=kind, **kwargs)
