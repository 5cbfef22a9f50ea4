"""
Modelos de dados de pontuação: esquemas, constantes e estrelas pontuadas.
"""

import math
from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

ACOS_INV_SQRT3 = math.acos(1.0 / math.sqrt(3.0))


class Constants:
    """Constantes numéricas da teoria de pontuação."""

    DELTA_OCT = (-3.0 * math.pi + 12.0 * ACOS_INV_SQRT3) / math.sqrt(8.0)
    PT = 11.0 * math.pi / 3.0 - 12.0 * ACOS_INV_SQRT3
    KAPPA3 = 4.0 * math.pi / 3.0
    FCC_DENSITY = math.pi / math.sqrt(18.0)
    DODECAHEDRAL_DENSITY = math.pi / (
        15.0 * (1.0 - math.cos(math.pi / 5.0) * math.tan(math.pi / 3.0))
    )

    SHORT_EDGE = 2.51
    SPINE_MAX = 2.0 * math.sqrt(2.0)
    QR_CIRCUMRADIUS = 1.41
    ETA_THRESHOLD = math.sqrt(2.0)
    TRUNCATION_RADIUS = 1.255
    HSIANG_RADIUS = 2.18

    VORONOI_DIAMETER = 4.0 * math.sqrt(2.0)
    VORONOI_MAX_FACES = 49
    V_CELL_LOCALITY = 12.0 * math.sqrt(2.0)
    D_SIMPLEX_LOCALITY = 6.0 * math.sqrt(2.0)


class SchemeName(str, Enum):
    """Esquemas de pontuação suportados."""
    HF = "hf"
    VORONOI = "voronoi"
    FEJES_TOTH = "fejes_toth"
    HSIANG = "hsiang"
    HALES_DELAUNAY = "hales_delaunay"


class ScoreScheme(BaseModel):
    """Esquema de pontuação com seus parâmetros e constantes (A, B)."""

    model_config = ConfigDict(frozen=True)

    name: SchemeName
    b_param: Optional[float] = Field(
        default=None, gt=0, description="B do esquema de Voronoi"
    )
    t_param: Optional[float] = Field(
        default=None, ge=0, description="t do esquema de Fejes-Tóth"
    )

    @model_validator(mode="before")
    @classmethod
    def fill_defaults(cls, data: Any) -> Any:
        """Preenche parâmetros padrão de cada esquema."""
        if not isinstance(data, dict):
            return data
        data = dict(data)
        name = SchemeName(data.get("name"))
        if name == SchemeName.VORONOI and data.get("b_param") is None:
            data["b_param"] = Constants.FCC_DENSITY
        if name == SchemeName.FEJES_TOTH and data.get("t_param") is None:
            data["t_param"] = 0.0534
        return data

    @property
    def a_const(self) -> float:
        if self.name in (SchemeName.HF, SchemeName.HALES_DELAUNAY):
            return 4.0
        return 1.0

    @property
    def b_const(self) -> float:
        if self.name in (SchemeName.HF, SchemeName.HALES_DELAUNAY):
            return 4.0 * Constants.DELTA_OCT
        if self.name == SchemeName.VORONOI:
            return float(self.b_param)  # type: ignore[arg-type]
        return Constants.FCC_DENSITY

    @property
    def label(self) -> str:
        if self.name == SchemeName.VORONOI:
            return f"voronoi(B={self.b_param:.12g})"
        if self.name == SchemeName.FEJES_TOTH:
            return f"fejes_toth(t={self.t_param:.12g})"
        return self.name.value


class Branch(str, Enum):
    """Ramo de fórmula usado para pontuar uma região."""
    GAMMA = "gamma"
    VOR = "vor"
    VOR_TRUNC = "vor_trunc"
    V_CELL = "v_cell"
    VORONOI_CELL = "voronoi_cell"


class RegionScore(BaseModel):
    """Peso σ(R, v) de uma região na estrela de v."""

    region: str = Field(description="Identificador da região")
    weight: float
    branch: Branch
    rule: Optional[str] = Field(default=None, description="S1..S4 ou regra do esquema")


class ClusterScore(BaseModel):
    """Pontuação do cluster sobre uma face do mapa planar."""

    face_index: int
    sides: int
    score: float
    exact: bool = Field(default=True)


class StarScore(BaseModel):
    """Pontuação da estrela de decomposição de um vértice."""

    vertex: int
    scheme: str
    total: float
    regions: List[RegionScore] = Field(default_factory=list)
    clusters: List[ClusterScore] = Field(default_factory=list)
    neighbor_count: Optional[int] = Field(default=None, description="N(v) de Hsiang")
    self_weight: Optional[float] = Field(default=None, description="ω(v, v)")
    cached: bool = Field(default=False)

    @property
    def region_total(self) -> float:
        return float(sum(r.weight for r in self.regions))

    @property
    def cluster_total(self) -> float:
        return float(sum(c.score for c in self.clusters))


class Residual(BaseModel):
    """Resíduo de admissibilidade de uma região."""

    region: str
    residual: float
    tolerance: float
    passed: bool


class AdmissibilityReport(BaseModel):
    """Relatório da identidade Σ_v σ(R, v) = (Aρ(R) − B) vol(R)."""

    scheme: str
    regions_checked: int
    max_residual: float
    failures: List[Residual] = Field(default_factory=list)
    locality_radius: float = Field(description="Maior distância vértice-região observada")
    notes: List[str] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


class FaceCheck(BaseModel):
    """Verificações de desacoplamento e truncamento sobre uma face."""

    face_index: int
    sides: int
    convex: bool
    checked: bool
    symmetric_difference: Optional[float] = Field(default=None)
    gamma: Optional[float] = Field(default=None)
    gamma_trunc: Optional[float] = Field(default=None)
    truncated_identity_gap: Optional[float] = Field(default=None)
    passed: bool = Field(default=True)


class DecouplingReport(BaseModel):
    """Relatório por face das verificações de desacoplamento e truncamento."""

    vertex: int
    faces: List[FaceCheck] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(face.passed for face in self.faces)


class SweepResult(BaseModel):
    """Resultado de uma varredura de perturbações de compressão."""

    kind: str
    samples: int
    seed: int
    max_gamma: float
    reference: float
    exceedances: int
    worst_lengths: List[float] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.exceedances == 0


class NegativeSelfWeight(BaseModel):
    """Vértice com peso próprio de Fejes-Tóth negativo."""

    vertex: int
    self_weight: float
    neighbors: int


class SchemeSummary(BaseModel):
    """Resumo de um esquema sobre os vértices interiores."""

    scheme: str
    vertices: int
    max_score: float
    argmax_vertex: int
    mean_score: float
    extras: Dict[str, float] = Field(default_factory=dict)


class DensityCheck(BaseModel):
    """Comparação de uma densidade calculada com o valor fechado esperado."""

    name: str
    value: float
    expected: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return abs(self.value - self.expected) <= self.tolerance
