"""
Modelos de dados das cotas de densidade.
"""

from typing import List, Optional

from pydantic import BaseModel, Field


class BoundResult(BaseModel):
    """Valor do funcional f(A, B, θ) = κ₃B / (κ₃A − θ)."""

    a: float = Field(gt=0)
    b: float = Field(gt=0)
    theta: float
    n: int = Field(default=3)
    kappa: float
    value: Optional[float] = Field(default=None, description="Cota (None se inválida)")
    valid: bool = Field(description="θ < κ₃A")


class ThetaEstimate(BaseModel):
    """θ empírico: máximo das pontuações de estrela sobre vértices interiores."""

    scheme: str
    theta: float
    argmax_vertex: int
    argmax_point: List[float]
    vertices: int
    lower_bound_only: bool = Field(
        default=True, description="Cota inferior do supremo verdadeiro"
    )


class DensityEstimate(BaseModel):
    """Densidade de um cubo e o melhor transladado encontrado."""

    side: float
    density: float
    best_translate: Optional[List[float]] = Field(default=None)
    translates_tried: int = Field(default=1)
    lower_bound_only: bool = Field(default=False)


class TelescopingRow(BaseModel):
    """Uma linha da verificação telescópica para um cubo de lado T."""

    side: float
    vertices: int
    score_sum: float
    expected: float
    residual: float
    residual_over_t2: float
    interior_regions: int = Field(default=0)
    interior_identity_gap: float = Field(default=0.0)


class TelescopingReport(BaseModel):
    """Relatório de escala do resíduo de fronteira."""

    scheme: str
    rows: List[TelescopingRow] = Field(default_factory=list)
    ratios: List[float] = Field(default_factory=list)
    passed: bool = Field(default=True)


class BoundTableRow(BaseModel):
    """Linha da tabela de cotas por esquema."""

    scheme: str
    a: float
    b: float
    theta: float
    f: Optional[float]
    valid: bool
    argmax_vertex: int
