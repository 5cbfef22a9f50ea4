"""
Modelos de dados para empacotamentos finitos de esferas unitárias.
"""

from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class PackingKind(str, Enum):
    """Geradores canônicos de empacotamentos."""
    FCC = "fcc"
    HCP = "hcp"
    DODECAHEDRAL = "dodeca"
    PENTAGONAL_PRISM = "pentaprism"
    RANDOM = "random"
    CUSTOM = "custom"


class Box(BaseModel):
    """Caixa alinhada aos eixos."""

    model_config = ConfigDict(frozen=True)

    min: List[float] = Field(min_length=3, max_length=3, description="Canto mínimo")
    max: List[float] = Field(min_length=3, max_length=3, description="Canto máximo")

    @model_validator(mode="after")
    def validate_corners(self) -> "Box":
        """Valida que max >= min em cada eixo."""
        if any(hi < lo for lo, hi in zip(self.min, self.max)):
            raise ValueError(f"Caixa inválida: min={self.min}, max={self.max}")
        return self

    @property
    def lower(self) -> np.ndarray:
        return np.array(self.min, dtype=float)

    @property
    def upper(self) -> np.ndarray:
        return np.array(self.max, dtype=float)

    @property
    def edges(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def volume(self) -> float:
        return float(np.prod(self.edges))

    @property
    def center(self) -> np.ndarray:
        return (self.lower + self.upper) / 2.0

    def inflated(self, margin: float) -> "Box":
        """Retorna a caixa expandida (ou encolhida, se negativa) por `margin`."""
        lower = self.lower - margin
        upper = self.upper + margin
        if np.any(upper < lower):
            mid = (lower + upper) / 2.0
            lower = np.minimum(lower, mid)
            upper = np.maximum(upper, mid)
        return Box(min=lower.tolist(), max=upper.tolist())

    def contains(self, points: np.ndarray, tol: float = 0.0) -> np.ndarray:
        """Pertinência fechada de um lote de pontos."""
        pts = np.atleast_2d(points)
        return np.all((pts >= self.lower - tol) & (pts <= self.upper + tol), axis=1)

    def contains_box(self, other: "Box", tol: float = 1e-12) -> bool:
        """Verdadeiro se `other` está contida nesta caixa."""
        return bool(
            np.all(other.lower >= self.lower - tol)
            and np.all(other.upper <= self.upper + tol)
        )

    def boundary_distance(self, points: np.ndarray) -> np.ndarray:
        """Distância de cada ponto até a fronteira (negativa fora da caixa)."""
        pts = np.atleast_2d(points)
        return np.minimum(pts - self.lower, self.upper - pts).min(axis=1)

    @classmethod
    def cube(cls, center: Any, side: float) -> "Box":
        """Cubo de lado `side` centrado em `center`."""
        c = np.asarray(center, dtype=float)
        return cls(min=(c - side / 2.0).tolist(), max=(c + side / 2.0).tolist())


class Packing(BaseModel):
    """
    Empacotamento finito de esferas unitárias.

    A saturação é afirmada apenas dentro de `domain`. Configurações locais
    (dodecaédrica, prisma pentagonal) são marcadas com `saturated=False`.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    centers: np.ndarray = Field(description="Centros (n x 3)")
    domain: Box = Field(description="Caixa onde a saturação é afirmada")
    label: str = Field(default="", description="Rótulo livre")
    kind: PackingKind = Field(default=PackingKind.CUSTOM)
    saturated: bool = Field(default=True, description="Falso para configurações locais")
    metadata: Dict[str, Any] = Field(default_factory=dict)

    @field_validator("centers", mode="before")
    @classmethod
    def validate_centers(cls, v: Any) -> np.ndarray:
        """Valida formato (n, 3) e coordenadas finitas."""
        array = np.array(v, dtype=float).reshape(-1, 3)
        if not np.all(np.isfinite(array)):
            raise ValueError("Centros com coordenadas não finitas")
        array.setflags(write=False)
        return array

    @property
    def size(self) -> int:
        return int(self.centers.shape[0])

    def to_json_dict(self) -> Dict[str, Any]:
        """Formato de arquivo: {label, domain:{min,max}, centers:[[x,y,z],...]}."""
        return {
            "label": self.label,
            "kind": self.kind.value,
            "saturated": self.saturated,
            "domain": {"min": list(self.domain.min), "max": list(self.domain.max)},
            "centers": self.centers.tolist(),
            "metadata": self.metadata,
        }

    @classmethod
    def from_json_dict(cls, data: Dict[str, Any]) -> "Packing":
        """Reconstrói um empacotamento a partir do formato de arquivo."""
        return cls(
            centers=data["centers"],
            domain=Box(**data["domain"]),
            label=data.get("label", ""),
            kind=PackingKind(data.get("kind", PackingKind.CUSTOM.value)),
            saturated=data.get("saturated", True),
            metadata=data.get("metadata", {}),
        )


class SaturationHole(BaseModel):
    """Ponto do domínio a distância >= 2 de todos os centros."""

    point: List[float] = Field(description="Posição certificada do buraco")
    distance: float = Field(description="Distância ao centro mais próximo")


class DistanceViolation(BaseModel):
    """Par de centros a distância menor que 2."""

    i: int
    j: int
    distance: float


class ValidationReport(BaseModel):
    """Relatório de validação de um empacotamento."""

    label: str
    size: int
    min_distance: Optional[float] = Field(default=None)
    distance_violations: List[DistanceViolation] = Field(default_factory=list)
    saturation_checked: bool = Field(default=True)
    grid_spacing: float = Field(description="Espaçamento efetivo da grade")
    grid_points: int = Field(default=0)
    holes: List[SaturationHole] = Field(default_factory=list)
    max_gap: float = Field(
        default=0.0, description="Maior distância de um ponto do domínio ao centro mais próximo"
    )

    @property
    def valid(self) -> bool:
        """Verdadeiro quando não há violações de distância nem buracos."""
        return not self.distance_violations and not self.holes
