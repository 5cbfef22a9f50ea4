"""
Modelos de dados da partição híbrida: sistema D, pontas, V-células,
mapas planares e clusters.
"""

from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from kepler.models.geometry import ConvexPolyhedron, Region, Tetra

SpineKey = Tuple[int, int]
TetraKey = Tuple[int, int, int, int]


class SimplexKind(str, Enum):
    """Classificação de um tetraedro do empacotamento."""
    QR = "qr"
    QL = "ql"
    PLAIN_D = "plain_d"


class AdmittingRule(str, Enum):
    """Regra que admitiu o tetraedro no sistema D."""
    QR = "QR"
    QL0 = "QL0"
    QL1 = "QL1"
    QL2 = "QL2"
    QL3 = "QL3"


class PieceProvenance(str, Enum):
    """Origem de uma peça de V-célula."""
    REDUCED_VORONOI = "reduced_voronoi"
    TIP_GAINED = "tip_gained"
    TIP_LOST = "tip_lost"


class TipCoverage(str, Enum):
    """Situação de uma ponta em relação à união dos conjuntos D."""
    COVERED = "covered"
    UNCOVERED = "uncovered"
    PARTIAL = "partial"


class AnomalyKind(str, Enum):
    """Tipos de anomalia numérica (propriedades falseadas pela geometria)."""
    NOT_D_SIMPLEX = "not_d_simplex"
    QR_OVERLAP = "qr_overlap"
    QL_QR_SHAPE = "ql_qr_shape"
    QL_ANCHOR_OVERLAP = "ql_anchor_overlap"
    QL_OCTAHEDRON_SHAPE = "ql_octahedron_shape"
    MULTIPLE_NEGATIVE_VERTICES = "multiple_negative_vertices"
    TIP_OUTSIDE_FACE = "tip_outside_face"
    TIP_PARTIALLY_COVERED = "tip_partially_covered"
    ARC_CROSSING = "arc_crossing"
    SPINE_SPLIT_ACROSS_CLUSTERS = "spine_split_across_clusters"
    NON_GENERIC_INPUT = "non_generic_input"


class Anomaly(BaseModel):
    """Registro de uma anomalia detectada."""

    kind: AnomalyKind
    message: str
    vertices: List[int] = Field(default_factory=list)
    value: Optional[float] = Field(default=None)


class ClassifiedTetra(BaseModel):
    """Tetraedro QR/QL com sua classificação."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    tetra: Tetra
    kind: SimplexKind
    spine: Optional[SpineKey] = Field(default=None, description="Espinha (QL)")

    @property
    def key(self) -> TetraKey:
        return self.tetra.key  # type: ignore[return-value]


class Spine(BaseModel):
    """Aresta longa (2.51, 2√2] com suas âncoras e quartos."""

    model_config = ConfigDict(frozen=True)

    endpoints: SpineKey = Field(description="Extremos ordenados lexicograficamente")
    length: float
    anchors: List[int] = Field(default_factory=list)
    ql_keys: List[TetraKey] = Field(default_factory=list)

    @property
    def isolated(self) -> bool:
        """Um QL é isolado quando é o único na sua espinha."""
        return len(self.ql_keys) == 1


class QOctahedron(BaseModel):
    """Octaedro com 12 arestas em [2, 2.51] e três diagonais."""

    model_config = ConfigDict(frozen=True)

    vertices: Tuple[int, int, int, int, int, int]
    diagonals: List[SpineKey] = Field(description="As três diagonais")
    diagonal_lengths: List[float]
    chosen: Optional[SpineKey] = Field(
        default=None, description="Diagonal escolhida pela regra QL2"
    )

    @property
    def live(self) -> bool:
        """Vivo quando alguma diagonal mede no máximo 2√2."""
        return any(length <= 2.0 * np.sqrt(2.0) + 1e-9 for length in self.diagonal_lengths)


class DTetra(BaseModel):
    """Tetraedro admitido no sistema D."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    tetra: Tetra
    kind: SimplexKind
    rule: AdmittingRule
    spine: Optional[SpineKey] = Field(default=None)
    isolated: bool = Field(default=False)
    in_q_octahedron: bool = Field(default=False)

    @property
    def key(self) -> TetraKey:
        return self.tetra.key  # type: ignore[return-value]


class DSystem(BaseModel):
    """Conjunto selecionado de tetraedros QR/QL sem sobreposição."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    tetras: List[DTetra] = Field(default_factory=list)
    spines: Dict[str, List[TetraKey]] = Field(
        default_factory=dict, description="Quartos incluídos por espinha"
    )
    excluded_spines: List[SpineKey] = Field(default_factory=list)
    anomalies: List[Anomaly] = Field(default_factory=list)

    def by_rule(self) -> Dict[str, int]:
        """Contagem de tetraedros por regra de admissão."""
        counts: Dict[str, int] = {}
        for item in self.tetras:
            counts[item.rule.value] = counts.get(item.rule.value, 0) + 1
        return counts


class Tip(BaseModel):
    """Ponta Δ(T, v) associada ao vértice negativo v de T."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    tetra_key: TetraKey
    negative_vertex: int
    polyhedron: ConvexPolyhedron
    coverage: TipCoverage
    covered_volume: float = Field(description="Volume da ponta dentro de conjuntos D")

    @property
    def uncovered(self) -> bool:
        return self.coverage == TipCoverage.UNCOVERED


class VCellPiece(BaseModel):
    """Peça convexa de uma V-célula com sua procedência."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    polyhedron: ConvexPolyhedron
    provenance: PieceProvenance
    source_tip: Optional[TetraKey] = Field(default=None)


class VCell(BaseModel):
    """
    V-célula de um vértice.

    O volume e a compressão são acumulados com sinal sobre a célula de
    Voronoi, as interseções com conjuntos D e as pontas trocadas. As peças
    explícitas só são montadas sob demanda.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    owner: int
    volume: float
    covered_volume: float
    voronoi_volume: float
    lost_volume: float = Field(default=0.0)
    gained_volume: float = Field(default=0.0)
    pieces: Optional[List[VCellPiece]] = Field(default=None)
    clipped: bool = Field(default=False)

    @property
    def region(self) -> Region:
        """Região explícita (exige peças montadas)."""
        if self.pieces is None:
            raise ValueError("V-célula sem peças explícitas")
        return Region(pieces=[p.polyhedron for p in self.pieces], owner=self.owner)


class PlanarFace(BaseModel):
    """Face do mapa planar, dada por ciclos de fronteira sobre nós projetados."""

    cycles: List[List[int]] = Field(description="Ciclos de fronteira (índices de nós)")
    isolated_nodes: List[int] = Field(default_factory=list)
    area: float = Field(description="Área esférica (esferorradianos)")
    sides: int = Field(description="Número de lados do ciclo externo")
    convex: bool = Field(default=False)
    simple: bool = Field(default=True, description="Um único ciclo simples sem buracos")
    triangles: Optional[List[Tuple[int, int, int]]] = Field(default=None)


class PlanarMap(BaseModel):
    """Mapa planar G(v) sobre a esfera unitária centrada em v."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    vertex: int
    nodes: List[int] = Field(description="Índices de empacotamento dos nós")
    directions: np.ndarray = Field(description="Projeções unitárias (k x 3)")
    arcs: List[Tuple[int, int]] = Field(description="Arcos em índices de nós")
    faces: List[PlanarFace] = Field(default_factory=list)
    anomalies: List[Anomaly] = Field(default_factory=list)

    def face_statistics(self) -> Dict[str, int]:
        """Histograma de lados das faces, com contagem de faces não simples."""
        stats: Dict[str, int] = {}
        for face in self.faces:
            key = f"{face.sides}_sided"
            stats[key] = stats.get(key, 0) + 1
            if not face.simple:
                stats["non_simple"] = stats.get("non_simple", 0) + 1
            if face.isolated_nodes:
                stats["isolated_nodes"] = stats.get("isolated_nodes", 0) + len(
                    face.isolated_nodes
                )
        return stats


class Cluster(BaseModel):
    """Parte da estrela de decomposição dentro do cone sobre uma face."""

    face_index: int
    sides: int
    d_tetras: List[TetraKey] = Field(default_factory=list)
    v_cell_volume: float = Field(default=0.0)
    v_cell_compression: float = Field(default=0.0)
    exact: bool = Field(default=True)


class StructuralCheck(BaseModel):
    """Resultado de uma verificação de propriedade da partição."""

    name: str
    checked: int = Field(default=0, description="Número de casos examinados")
    failures: List[str] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


class CoverageReport(BaseModel):
    """Localização de pontos por Monte Carlo: cada amostra deve cair em exatamente uma peça."""

    samples: int
    uncovered: int = Field(description="Amostras fora de todas as peças")
    multiply_covered: int = Field(description="Amostras em mais de uma peça")
    volume: float
    pieces: int
    seed: int

    @property
    def failure_rate(self) -> float:
        if self.samples == 0:
            return 0.0
        return (self.uncovered + self.multiply_covered) / self.samples

    @property
    def passed(self) -> bool:
        return self.failure_rate < 1e-4
