"""
Módulo core da biblioteca.

Contém configurações, logging e utilitários centrais.
"""

from kepler.core.config import Settings, settings
from kepler.core.logging import LoggerMixin, configure_logging, get_logger

__all__ = ["Settings", "settings", "LoggerMixin", "configure_logging", "get_logger"]
