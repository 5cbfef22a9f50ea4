"""
Modelos de dados para primitivas geométricas 3D.

Todos os comprimentos estão em unidades de raio de esfera (raio = 1, distância
mínima entre centros = 2). Os arrays numpy são copiados e marcados como somente
leitura na construção, de modo que os modelos podem ser compartilhados entre
threads sem sincronização.
"""

from typing import Any, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

# Ordem das arestas: l1..l3 partem de v0, l4 = |v2-v3|, l5 = |v1-v3|, l6 = |v1-v2|
EDGE_PAIRS: Tuple[Tuple[int, int], ...] = ((0, 1), (0, 2), (0, 3), (2, 3), (1, 3), (1, 2))


def _frozen_array(value: Any, shape_tail: Tuple[int, ...], name: str) -> np.ndarray:
    array = np.array(value, dtype=float)
    if array.ndim != len(shape_tail) + 1 or array.shape[1:] != shape_tail:
        raise ValueError(f"{name} com formato inválido: {array.shape}")
    if not np.all(np.isfinite(array)):
        raise ValueError(f"{name} contém coordenadas não finitas")
    array.setflags(write=False)
    return array


class Tetra(BaseModel):
    """Tetraedro dado por quatro vértices, opcionalmente indexados no empacotamento."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    vertices: np.ndarray = Field(description="Coordenadas dos 4 vértices (4 x 3)")
    indices: Optional[Tuple[int, int, int, int]] = Field(
        default=None, description="Índices dos vértices no empacotamento"
    )

    @field_validator("vertices", mode="before")
    @classmethod
    def validate_vertices(cls, v: Any) -> np.ndarray:
        """Valida formato (4, 3) e coordenadas finitas."""
        array = _frozen_array(v, (3,), "vertices")
        if array.shape[0] != 4:
            raise ValueError("Tetraedro exige exatamente 4 vértices")
        return array

    @property
    def edge_lengths(self) -> np.ndarray:
        """Comprimentos l1..l6 na ordem canônica."""
        v = self.vertices
        return np.array([np.linalg.norm(v[i] - v[j]) for i, j in EDGE_PAIRS])

    @property
    def squared_lengths(self) -> np.ndarray:
        """Comprimentos ao quadrado x1..x6."""
        return self.edge_lengths**2

    @property
    def key(self) -> Tuple[int, ...]:
        """Chave estável do tetraedro (índices ordenados)."""
        if self.indices is None:
            raise ValueError("Tetraedro sem índices de empacotamento")
        return tuple(sorted(self.indices))

    def reordered(self, apex: int) -> "Tetra":
        """Retorna o tetraedro com o vértice `apex` na posição 0."""
        order = [apex] + [i for i in range(4) if i != apex]
        indices = None
        if self.indices is not None:
            indices = tuple(self.indices[i] for i in order)
        return Tetra(vertices=self.vertices[order], indices=indices)


class ConvexPolyhedron(BaseModel):
    """
    Poliedro convexo limitado.

    Os semiespaços seguem a convenção do scipy: cada linha [a, b] representa
    a·x + b <= 0. As faces são triângulos do fecho convexo, com as equações
    de plano orientadas para fora.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    halfspaces: np.ndarray = Field(description="Semiespaços (m x 4), a·x + b <= 0")
    vertices: np.ndarray = Field(description="Vértices (k x 3)")
    triangles: np.ndarray = Field(description="Faces trianguladas (f x 3) em índices")
    equations: np.ndarray = Field(description="Planos das faces (f x 4), normal externa")
    volume: float = Field(ge=0, description="Volume euclidiano")
    clipped: bool = Field(
        default=False, description="Verdadeiro quando a caixa de recorte está ativa"
    )

    @field_validator("halfspaces", "equations", mode="before")
    @classmethod
    def validate_planes(cls, v: Any) -> np.ndarray:
        """Valida matrizes de planos."""
        return _frozen_array(v, (4,), "planos")

    @field_validator("vertices", mode="before")
    @classmethod
    def validate_points(cls, v: Any) -> np.ndarray:
        """Valida vértices."""
        return _frozen_array(v, (3,), "vertices")

    @field_validator("triangles", mode="before")
    @classmethod
    def validate_triangles(cls, v: Any) -> np.ndarray:
        """Valida índices das faces."""
        array = np.array(v, dtype=int).reshape(-1, 3)
        array.setflags(write=False)
        return array

    @property
    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        """Caixa envolvente (mínimo, máximo)."""
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    @property
    def centroid(self) -> np.ndarray:
        """Média dos vértices (ponto interior)."""
        return self.vertices.mean(axis=0)

    @property
    def face_count(self) -> int:
        """Número de faces planas distintas."""
        planes = np.round(self.equations, 9)
        return len(np.unique(planes, axis=0))

    @property
    def diameter(self) -> float:
        """Maior distância entre vértices."""
        diffs = self.vertices[:, None, :] - self.vertices[None, :, :]
        return float(np.sqrt((diffs**2).sum(axis=2)).max())

    def contains(self, points: np.ndarray, tol: float = 1e-12) -> np.ndarray:
        """Testa pertinência (fechada, com tolerância) de um lote de pontos."""
        pts = np.atleast_2d(points)
        values = pts @ self.halfspaces[:, :3].T + self.halfspaces[:, 3]
        return np.all(values <= tol, axis=1)


class Region(BaseModel):
    """União finita de poliedros convexos sem sobreposição."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    pieces: List[ConvexPolyhedron] = Field(default_factory=list)
    owner: Optional[int] = Field(default=None, description="Vértice dono da região")

    @property
    def volume(self) -> float:
        """Volume total das peças."""
        return float(sum(piece.volume for piece in self.pieces))

    @property
    def is_empty(self) -> bool:
        """Verdadeiro quando a região não tem peças."""
        return not self.pieces


class RogersShape(BaseModel):
    """Parâmetros (a, b, c) de um simplexo de Rogers, 1 <= a <= b <= c."""

    model_config = ConfigDict(frozen=True)

    a: float = Field(gt=0)
    b: float = Field(gt=0)
    c: float = Field(gt=0)

    @model_validator(mode="after")
    def validate_ordering(self) -> "RogersShape":
        """Valida a ordenação a <= b <= c (tolerância 1e-12)."""
        tol = 1e-12
        if not (1.0 - tol <= self.a <= self.b + tol and self.b <= self.c + tol):
            raise ValueError(
                f"Forma de Rogers fora de ordem: a={self.a}, b={self.b}, c={self.c}"
            )
        return self
