"""
Configurações centralizadas da biblioteca.

Este módulo centraliza todas as configurações usando Pydantic Settings,
permitindo carregamento automático de variáveis de ambiente com validação de tipos.
As tolerâncias geométricas, os limiares da partição e os parâmetros do oráculo
de Monte Carlo ficam todos aqui, para que um manifesto de execução possa
reproduzir qualquer resultado.
"""

import math

from pydantic import Field
from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """
    Configurações carregadas de variáveis de ambiente.

    Utiliza Pydantic Settings para validação automática de tipos e carregamento
    de configurações a partir de variáveis de ambiente ou arquivo .env.
    """

    # === CONFIGURAÇÕES DA APLICAÇÃO ===
    app_name: str = Field(default="Kepler Scoring", alias="APP_NAME")
    app_version: str = Field(default="0.1.0", alias="APP_VERSION")
    debug: bool = Field(default=False, alias="DEBUG")
    log_level: str = Field(default="INFO", alias="LOG_LEVEL")

    # === CONFIGURAÇÕES GEOMÉTRICAS ===
    geometry_tolerance: float = Field(
        default=1e-9, gt=0, alias="KEPLER_GEOMETRY_TOLERANCE"
    )
    overlap_volume_tolerance: float = Field(
        default=1e-9, gt=0, alias="KEPLER_OVERLAP_TOLERANCE"
    )
    clip_inflation: float = Field(
        default=4.0 * math.sqrt(2.0), gt=0, alias="KEPLER_CLIP_INFLATION"
    )

    # === CONFIGURAÇÕES DE EMPACOTAMENTO ===
    saturation_grid_spacing: float = Field(
        default=0.05, gt=0, alias="KEPLER_SATURATION_GRID_SPACING"
    )
    saturation_max_grid_points: int = Field(
        default=2_000_000, gt=0, alias="KEPLER_SATURATION_MAX_GRID_POINTS"
    )
    interior_margin: float = Field(
        default=12.0 * math.sqrt(2.0), ge=0, alias="KEPLER_INTERIOR_MARGIN"
    )
    star_radius: float = Field(
        default=6.0 * math.sqrt(2.0) + 4.0, gt=0, alias="KEPLER_STAR_RADIUS"
    )
    prism_ring_radius: float = Field(
        default=math.sqrt(3.0), gt=0, alias="KEPLER_PRISM_RADIUS"
    )
    prism_ring_height: float = Field(default=1.0, ge=0, alias="KEPLER_PRISM_HEIGHT")
    prism_axial: bool = Field(default=True, alias="KEPLER_PRISM_AXIAL")

    # === CONFIGURAÇÕES DE PONTUAÇÃO ===
    fejes_toth_t: float = Field(default=0.0534, ge=0, alias="KEPLER_FEJES_TOTH_T")
    voronoi_b: float = Field(
        default=math.pi / math.sqrt(18.0), gt=0, alias="KEPLER_VORONOI_B"
    )
    truncation_radius: float = Field(
        default=1.255, gt=0, alias="KEPLER_TRUNCATION_RADIUS"
    )

    # === CONFIGURAÇÕES DE MONTE CARLO ===
    seed: int = Field(default=20240601, ge=0, alias="KEPLER_SEED")
    mc_samples: int = Field(default=1_000_000, gt=0, alias="KEPLER_MC_SAMPLES")
    mc_target_stderr: float = Field(
        default=1e-5, gt=0, alias="KEPLER_MC_TARGET_STDERR"
    )
    mc_max_samples: int = Field(
        default=1 << 24, gt=0, alias="KEPLER_MC_MAX_SAMPLES"
    )
    coverage_samples: int = Field(
        default=1_000_000, gt=0, alias="KEPLER_COVERAGE_SAMPLES"
    )

    # === CONFIGURAÇÕES DE EXECUÇÃO ===
    threads: int = Field(default=4, ge=1, alias="KEPLER_THREADS")

    # === CONFIGURAÇÕES DE COTAS ===
    density_translate_stride: float = Field(
        default=0.25, gt=0, alias="KEPLER_TRANSLATE_STRIDE"
    )
    density_max_translates: int = Field(
        default=4096, gt=0, alias="KEPLER_MAX_TRANSLATES"
    )
    telescoping_identity_max_regions: int = Field(
        default=200, gt=0, alias="KEPLER_TELESCOPING_MAX_REGIONS"
    )

    class Config:
        """Configurações do Pydantic Settings."""
        env_file = ".env"
        case_sensitive = False
        populate_by_name = True


# Instância global das configurações - carregada automaticamente na importação
settings = Settings()
