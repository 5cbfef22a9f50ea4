"""
Modelos de dados de execução da CLI: configuração, manifesto e falhas.
"""

from datetime import datetime
from enum import Enum
from typing import Any, Dict, List, Optional
from uuid import UUID, uuid4

from pydantic import BaseModel, Field, field_validator

from kepler.models.scoring import SchemeName


class Command(str, Enum):
    """Subcomandos da CLI."""
    GEN = "gen"
    DECOMPOSE = "decompose"
    SCORE = "score"
    BOUND = "bound"
    VERIFY = "verify"
    REPORT = "report"


class OutputFormat(str, Enum):
    """Formato de saída dos relatórios."""
    JSON = "json"
    CSV = "csv"


class RunConfig(BaseModel):
    """Configuração de uma execução da CLI."""

    command: Command
    input_path: Optional[str] = Field(default=None)
    output_path: Optional[str] = Field(default=None)
    output_format: OutputFormat = Field(default=OutputFormat.JSON)
    schemes: List[SchemeName] = Field(default_factory=lambda: [SchemeName.HF])
    fejes_toth_t: Optional[float] = Field(default=None, ge=0)
    voronoi_b: Optional[float] = Field(default=None, gt=0)
    seed: int = Field(ge=0)
    mc_samples: int = Field(gt=0)
    threads: int = Field(default=1, ge=1)
    overrides: Dict[str, Any] = Field(
        default_factory=dict, description="Tolerâncias sobrescritas nesta execução"
    )
    options: Dict[str, Any] = Field(
        default_factory=dict, description="Opções específicas do subcomando"
    )

    @field_validator("schemes")
    @classmethod
    def validate_schemes(cls, v: List[SchemeName]) -> List[SchemeName]:
        """Valida que a lista de esquemas não está vazia."""
        if not v:
            raise ValueError("Lista de esquemas não pode estar vazia")
        return v


class CheckFailure(BaseModel):
    """Falha de verificação legível por máquina."""

    check: str
    subject: str
    detail: str
    value: Optional[float] = Field(default=None)


class RunManifest(BaseModel):
    """Manifesto suficiente para reproduzir uma execução."""

    id: UUID = Field(default_factory=uuid4)
    config: RunConfig
    settings: Dict[str, Any]
    versions: Dict[str, str]
    inputs: Dict[str, str] = Field(default_factory=dict, description="SHA-256 das entradas")
    outputs: Dict[str, str] = Field(default_factory=dict, description="SHA-256 das saídas")
    exit_code: int = Field(default=0)
    failures: List[CheckFailure] = Field(default_factory=list)
    started_at: datetime = Field(default_factory=datetime.utcnow)
    finished_at: Optional[datetime] = Field(default=None)
