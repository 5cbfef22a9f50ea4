"""
Construção, validação e consultas de vizinhança de empacotamentos.

Este módulo implementa os geradores canônicos (CFC, HCP, dodecaédrico, prisma
pentagonal e aleatório saturado), o índice de vizinhos baseado em `cKDTree` e
a validação de distância mínima e saturação.
"""

import itertools
import json
import math
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import ValidationError
from scipy.optimize import minimize
from scipy.spatial import Delaunay, QhullError, cKDTree

from kepler.core.config import settings
from kepler.core.logging import LoggerMixin, log_pipeline_event
from kepler.models.packing import (
    Box,
    DistanceViolation,
    Packing,
    PackingKind,
    SaturationHole,
    ValidationReport,
)

MAX_QUERY_RADIUS = 12.0 * math.sqrt(2.0)
MAX_REPORTED_VIOLATIONS = 100
MAX_REFINED_CANDIDATES = 200


class PackingError(Exception):
    """Erro específico de empacotamentos."""
    pass


class PackingValidationError(PackingError):
    """Empacotamento com violação de distância ou buraco de saturação."""

    def __init__(self, message: str, report: ValidationReport):
        super().__init__(message)
        self.report = report


class NeighborIndex:
    """
    Índice espacial somente leitura sobre os centros de um empacotamento.

    As consultas por raio são limitadas a 12√2, o raio de localidade da
    partição.
    """

    def __init__(self, packing: Packing):
        self.packing = packing
        self.centers = packing.centers
        self.tree = cKDTree(packing.centers) if packing.size else None

    def _check_radius(self, radius: float) -> None:
        if radius > MAX_QUERY_RADIUS + 1e-9:
            raise PackingError(f"Raio de consulta {radius:.4f} excede o limite 12√2")

    def within(self, point: Sequence[float], radius: float) -> np.ndarray:
        """Índices (ordenados) dos centros a distância <= raio do ponto."""
        self._check_radius(radius)
        if self.tree is None:
            return np.zeros(0, dtype=int)
        return np.array(sorted(self.tree.query_ball_point(np.asarray(point, dtype=float), radius)), dtype=int)

    def neighbors(self, i: int, radius: float) -> np.ndarray:
        """Índices dos centros a distância <= raio do centro i, excluindo i."""
        idx = self.within(self.centers[i], radius)
        return idx[idx != i]

    def pairs(self, radius: float) -> np.ndarray:
        """Pares (i < j) a distância <= raio."""
        self._check_radius(radius)
        if self.tree is None:
            return np.zeros((0, 2), dtype=int)
        return self.tree.query_pairs(radius, output_type="ndarray")

    def nearest(self, points: np.ndarray, k: int = 1) -> Tuple[np.ndarray, np.ndarray]:
        """Distâncias e índices dos k centros mais próximos."""
        if self.tree is None:
            raise PackingError("Empacotamento vazio")
        return self.tree.query(np.atleast_2d(points), k=k)

    def brute_force_within(self, point: Sequence[float], radius: float) -> np.ndarray:
        """Varredura exaustiva, usada para conferir o índice."""
        d = np.linalg.norm(self.centers - np.asarray(point, dtype=float), axis=1)
        return np.flatnonzero(d <= radius)


# === GERADORES ===

class PackingGenerator(LoggerMixin):
    """Geradores de empacotamentos canônicos."""

    def __init__(self, margin: Optional[float] = None):
        self.margin = settings.interior_margin if margin is None else float(margin)

    def _block(self, points: np.ndarray, shells: int, kind: PackingKind, label: str) -> Packing:
        half = 2.0 * shells + self.margin + 3.0
        points = points[np.abs(points).max(axis=1) <= half + 1e-9]
        domain = Box.cube([0.0, 0.0, 0.0], 2.0 * (half - 2.0))
        log_pipeline_event(
            "packing_generated", stage="gen", kind=kind.value, size=len(points), shells=shells
        )
        return Packing(
            centers=points,
            domain=domain,
            label=label,
            kind=kind,
            metadata={"shells": shells, "margin": self.margin, "interior_radius": 2.0 * shells},
        )

    def gen_fcc(self, shells: int) -> Packing:
        """
        Bloco CFC com distância 2 entre vizinhos, centrado num vértice.

        O bloco é acolchoado pela margem de interioridade, de modo que todos os
        vértices com norma do máximo <= 2·shells são interiores.

        Raises:
            PackingError: Se shells < 2
        """
        if shells < 2:
            raise PackingError("shells deve ser >= 2")
        half = 2.0 * shells + self.margin + 3.0
        n = int(math.floor(half / math.sqrt(2.0)))
        r = np.arange(-n, n + 1)
        i, j, k = np.meshgrid(r, r, r, indexing="ij")
        ijk = np.stack([i.ravel(), j.ravel(), k.ravel()], axis=1)
        ijk = ijk[ijk.sum(axis=1) % 2 == 0]
        return self._block(ijk * math.sqrt(2.0), shells, PackingKind.FCC, f"fcc-{shells}")

    def gen_hcp(self, shells: int) -> Packing:
        """
        Bloco HCP (camadas ABAB) com distância 2 entre vizinhos, centrado num vértice.

        Raises:
            PackingError: Se shells < 2
        """
        if shells < 2:
            raise PackingError("shells deve ser >= 2")
        half = 2.0 * shells + self.margin + 3.0
        height = math.sqrt(8.0 / 3.0)
        a1 = np.array([2.0, 0.0, 0.0])
        a2 = np.array([1.0, math.sqrt(3.0), 0.0])
        shift = (a1 + a2) / 3.0
        nz = int(math.ceil(half / height))
        nxy = int(math.ceil(2.0 * half / math.sqrt(3.0))) + 2
        r = np.arange(-nxy, nxy + 1)
        i, j = np.meshgrid(r, r, indexing="ij")
        layer = i.ravel()[:, None] * a1 + j.ravel()[:, None] * a2
        layers = []
        for k in range(-nz, nz + 1):
            offset = shift if k % 2 else np.zeros(3)
            pts = layer + offset + np.array([0.0, 0.0, k * height])
            layers.append(pts)
        return self._block(np.vstack(layers), shells, PackingKind.HCP, f"hcp-{shells}")

    def gen_dodecahedral(self) -> Packing:
        """Esfera central mais 12 esferas tangentes nas direções das faces de um dodecaedro."""
        phi = (1.0 + math.sqrt(5.0)) / 2.0
        dirs = []
        for s1 in (-1.0, 1.0):
            for s2 in (-1.0, 1.0):
                dirs.extend([(0.0, s1, s2 * phi), (s1, s2 * phi, 0.0), (s2 * phi, 0.0, s1)])
        u = np.array(dirs) / math.sqrt(1.0 + phi * phi)
        centers = np.vstack([np.zeros(3), 2.0 * u])
        return Packing(
            centers=centers,
            domain=Box.cube([0.0, 0.0, 0.0], 2.0),
            label="dodecahedral",
            kind=PackingKind.DODECAHEDRAL,
            saturated=False,
        )

    def gen_pentagonal_prism(self) -> Packing:
        """
        Esfera central mais anéis pentagonais alinhados e duas esferas axiais.

        Com raio de anel √3 e alturas ±1, os dez centros do prisma e os dois
        axiais (0, 0, ±2) estão todos a distância 2 da origem; o lado do
        pentágono mede 2√3·sen(π/5) ≈ 2.036.
        """
        r = settings.prism_ring_radius
        z = settings.prism_ring_height
        angles = 2.0 * math.pi * np.arange(5) / 5.0
        ring = np.stack([r * np.cos(angles), r * np.sin(angles), np.zeros(5)], axis=1)
        centers = [np.zeros((1, 3)), ring + [0.0, 0.0, z], ring - [0.0, 0.0, z]]
        if settings.prism_axial:
            centers.append(np.array([[0.0, 0.0, 2.0], [0.0, 0.0, -2.0]]))
        return Packing(
            centers=np.vstack(centers),
            domain=Box.cube([0.0, 0.0, 0.0], 2.0),
            label="pentagonal-prism",
            kind=PackingKind.PENTAGONAL_PRISM,
            saturated=False,
            metadata={"ring_radius": r, "ring_height": z, "axial": settings.prism_axial},
        )

    def gen_random_saturated(self, box: Box, seed: int) -> Packing:
        """
        Empacotamento saturado aleatório determinístico por semente.

        Inserção sequencial aleatória seguida de preenchimento dos buracos:
        enquanto algum circuncentro de Delaunay (com imagens espelhadas nas
        faces da caixa) estiver a distância >= 2 de todos os centros, um
        centro é inserido nele.

        Raises:
            PackingError: Se alguma aresta da caixa é menor que 8
        """
        if np.any(box.edges < 8.0):
            raise PackingError("A caixa deve ter arestas >= 8")
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), 1]))
        lo, hi = box.lower, box.upper
        points: List[np.ndarray] = []
        target = int(box.volume / (4.0 * math.pi / 3.0) * 0.45)
        misses = 0
        tree = None
        pending: List[np.ndarray] = []
        while misses < 2000 and len(points) < target:
            p = lo + (hi - lo) * rng.random(3)
            ok = True
            if tree is not None and tree.query_ball_point(p, 2.0):
                ok = False
            if ok and pending:
                ok = bool(np.min(np.linalg.norm(np.array(pending) - p, axis=1)) >= 2.0)
            if ok:
                points.append(p)
                pending.append(p)
                misses = 0
                if len(pending) >= 64:
                    tree = cKDTree(np.array(points))
                    pending = []
            else:
                misses += 1

        centers = np.array(points).reshape(-1, 3)
        rounds = 0
        while True:
            holes = self._holes(centers, box)
            if not holes:
                break
            accepted: List[np.ndarray] = []
            for radius, c in holes:
                if all(np.linalg.norm(c - a) >= 2.0 for a in accepted):
                    accepted.append(c)
            centers = np.vstack([centers, np.array(accepted)])
            rounds += 1

        log_pipeline_event(
            "random_packing_generated", stage="gen", seed=seed, size=len(centers), fill_rounds=rounds
        )
        return Packing(
            centers=centers,
            domain=box,
            label=f"random-{seed}",
            kind=PackingKind.RANDOM,
            metadata={"seed": seed},
        )

    def _holes(self, centers: np.ndarray, box: Box) -> List[Tuple[float, np.ndarray]]:
        """Circuncentros dentro da caixa a distância >= 2 de todos os centros."""
        if len(centers) < 4:
            axes = [np.linspace(a, b, 9) for a, b in zip(box.lower, box.upper)]
            grid = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, 3)
            if len(centers):
                d, _ = cKDTree(centers).query(grid)
            else:
                d = np.full(len(grid), np.inf)
            best = int(np.argmax(d))
            return [(float(d[best]), grid[best])] if d[best] >= 2.0 else []
        images = [centers]
        for axis in range(3):
            for bound in (box.lower[axis], box.upper[axis]):
                near = np.abs(centers[:, axis] - bound) <= 4.0
                mirrored = centers[near].copy()
                mirrored[:, axis] = 2.0 * bound - mirrored[:, axis]
                images.append(mirrored)
        corners = np.array(list(itertools.product(*zip(box.lower, box.upper))), dtype=float)
        cloud = np.vstack(images)
        tree = cKDTree(centers)
        candidates = [corners]
        try:
            tri = Delaunay(cloud)
            simplices = cloud[tri.simplices]
            a = 2.0 * (simplices[:, 1:] - simplices[:, :1])
            rhs = (simplices[:, 1:] ** 2).sum(axis=2) - (simplices[:, :1] ** 2).sum(axis=2)
            good = np.abs(np.linalg.det(a)) > 1e-12
            cc = np.linalg.solve(a[good], rhs[good][..., None])[..., 0]
            candidates.append(cc[box.contains(cc)])
        except QhullError as e:
            self.logger.warning("hole_triangulation_failed", size=len(cloud), error=str(e))
        cand = np.vstack(candidates)
        d, _ = tree.query(cand)
        order = np.argsort(-d)
        return [(float(d[i]), cand[i]) for i in order if d[i] >= 2.0]


# === VALIDAÇÃO ===

class PackingValidator(LoggerMixin):
    """Validação de distância mínima e saturação."""

    def __init__(self, spacing: Optional[float] = None, max_grid_points: Optional[int] = None):
        self.spacing = settings.saturation_grid_spacing if spacing is None else spacing
        self.max_grid_points = (
            settings.saturation_max_grid_points if max_grid_points is None else max_grid_points
        )

    def validate(self, p: Packing, strict: bool = False) -> ValidationReport:
        """
        Valida distância mínima e saturação no domínio.

        A saturação é testada numa grade (espaçamento <= 0.05, ampliado quando
        o limite de pontos é atingido). Um ponto da grade com folga acima de
        2 − espaçamento·√3/2 é refinado por otimização local e certificado como
        buraco se a distância ao centro mais próximo chega a 2. Circuncentros de
        Delaunay no domínio também são testados.

        Args:
            p: Empacotamento
            strict: Levanta exceção quando inválido

        Returns:
            ValidationReport: Relatório detalhado

        Raises:
            PackingValidationError: Se strict e o empacotamento é inválido
        """
        violations, min_distance = self._distance_check(p)
        report_kwargs = dict(
            label=p.label,
            size=p.size,
            min_distance=min_distance,
            distance_violations=violations[:MAX_REPORTED_VIOLATIONS],
        )
        if not p.saturated:
            report = ValidationReport(
                **report_kwargs, saturation_checked=False, grid_spacing=self.spacing
            )
        else:
            holes, spacing, count, max_gap = self._saturation_check(p)
            report = ValidationReport(
                **report_kwargs,
                grid_spacing=spacing,
                grid_points=count,
                holes=holes,
                max_gap=max_gap,
            )

        self.logger.info(
            "packing_validated",
            label=p.label,
            valid=report.valid,
            min_distance=min_distance,
            holes=len(report.holes),
            violations=len(violations),
        )
        if strict and not report.valid:
            raise PackingValidationError(f"Empacotamento inválido: {p.label}", report)
        return report

    @staticmethod
    def _distance_check(p: Packing) -> Tuple[List[DistanceViolation], Optional[float]]:
        if p.size < 2:
            return [], None
        tree = cKDTree(p.centers)
        d, _ = tree.query(p.centers, k=2)
        min_distance = float(d[:, 1].min())
        pairs = tree.query_pairs(2.0 - 1e-12, output_type="ndarray")
        violations = [
            DistanceViolation(
                i=int(i), j=int(j), distance=float(np.linalg.norm(p.centers[i] - p.centers[j]))
            )
            for i, j in pairs
        ]
        return violations, min_distance

    def _saturation_check(self, p: Packing) -> Tuple[List[SaturationHole], float, int, float]:
        domain = p.domain
        edges = np.maximum(domain.edges, 1e-9)
        spacing = self.spacing
        counts = np.floor(edges / spacing).astype(int) + 1
        if np.prod(counts.astype(float)) > self.max_grid_points:
            spacing = float((np.prod(edges) / self.max_grid_points) ** (1.0 / 3.0))
            spacing = max(spacing, self.spacing)
            counts = np.floor(edges / spacing).astype(int) + 1
            while np.prod(counts.astype(float)) > self.max_grid_points:
                spacing *= 1.05
                counts = np.floor(edges / spacing).astype(int) + 1
        if p.size == 0:
            center = domain.center
            return [SaturationHole(point=center.tolist(), distance=float("inf"))], spacing, 0, float("inf")

        tree = cKDTree(p.centers)
        axes = [np.linspace(lo, hi, n) for lo, hi, n in zip(domain.lower, domain.upper, counts)]
        threshold = 2.0 - spacing * math.sqrt(3.0) / 2.0
        candidates: List[np.ndarray] = []
        max_gap = 0.0
        gx, gy = np.meshgrid(axes[0], axes[1], indexing="ij")
        plane = np.stack([gx.ravel(), gy.ravel()], axis=1)
        for z in axes[2]:
            grid = np.hstack([plane, np.full((len(plane), 1), z)])
            d, _ = tree.query(grid)
            max_gap = max(max_gap, float(d.max()))
            hot = d >= threshold
            if np.any(hot):
                order = np.argsort(-d[hot])
                candidates.extend(grid[hot][order[:MAX_REFINED_CANDIDATES]])
        candidates.extend(self._delaunay_candidates(p, tree))

        holes: List[SaturationHole] = []
        if candidates:
            cand = np.array(candidates)
            d, _ = tree.query(cand)
            order = np.argsort(-d)[:MAX_REFINED_CANDIDATES]
            for start in cand[order]:
                point, gap = self._refine(tree, start, domain)
                max_gap = max(max_gap, gap)
                if gap >= 2.0 and all(np.linalg.norm(point - np.array(h.point)) > 1e-3 for h in holes):
                    holes.append(SaturationHole(point=point.tolist(), distance=gap))
        count = int(np.prod(counts))
        return holes, spacing, count, max_gap

    @staticmethod
    def _delaunay_candidates(p: Packing, tree: cKDTree) -> List[np.ndarray]:
        if p.size < 5:
            return []
        try:
            tri = Delaunay(p.centers)
        except QhullError:
            return []
        simplices = p.centers[tri.simplices]
        a = 2.0 * (simplices[:, 1:] - simplices[:, :1])
        rhs = (simplices[:, 1:] ** 2).sum(axis=2) - (simplices[:, :1] ** 2).sum(axis=2)
        good = np.abs(np.linalg.det(a)) > 1e-12
        cc = np.linalg.solve(a[good], rhs[good][..., None])[..., 0]
        cc = cc[p.domain.contains(cc)]
        if not len(cc):
            return []
        d, _ = tree.query(cc)
        return list(cc[d >= 2.0 - 1e-9])

    @staticmethod
    def _refine(tree: cKDTree, start: np.ndarray, domain: Box) -> Tuple[np.ndarray, float]:
        """Maximiza localmente a distância ao centro mais próximo dentro do domínio."""
        bounds = list(zip(domain.lower, domain.upper))

        def objective(x: np.ndarray) -> float:
            d, _ = tree.query(x)
            return -float(d)

        result = minimize(objective, start, method="Powell", bounds=bounds, options={"xtol": 1e-10, "ftol": 1e-12})
        point = np.clip(result.x, domain.lower, domain.upper)
        gap = -objective(point)
        start_gap = -objective(start)
        if start_gap > gap:
            return start, start_gap
        return point, gap


# === FUNÇÕES DE CONVENIÊNCIA ===

def gen_fcc(shells: int, margin: Optional[float] = None) -> Packing:
    """Bloco CFC (ver `PackingGenerator.gen_fcc`)."""
    return PackingGenerator(margin).gen_fcc(shells)


def gen_hcp(shells: int, margin: Optional[float] = None) -> Packing:
    """Bloco HCP (ver `PackingGenerator.gen_hcp`)."""
    return PackingGenerator(margin).gen_hcp(shells)


def gen_dodecahedral() -> Packing:
    return PackingGenerator().gen_dodecahedral()


def gen_pentagonal_prism() -> Packing:
    return PackingGenerator().gen_pentagonal_prism()


def gen_random_saturated(box: Box, seed: int) -> Packing:
    return PackingGenerator().gen_random_saturated(box, seed)


def validate(p: Packing, strict: bool = False) -> ValidationReport:
    """Valida um empacotamento (ver `PackingValidator.validate`)."""
    return PackingValidator().validate(p, strict=strict)


def interior_vertices(p: Packing, margin: Optional[float] = None) -> np.ndarray:
    """
    Vértices cuja distância à fronteira do domínio excede a margem.

    Configurações locais não saturadas consideram apenas o centro na origem.
    """
    if not p.saturated:
        return np.flatnonzero(np.linalg.norm(p.centers, axis=1) <= 1e-12)
    m = settings.interior_margin if margin is None else margin
    return np.flatnonzero(p.domain.boundary_distance(p.centers) > m)


def is_interior(p: Packing, i: int, margin: Optional[float] = None) -> bool:
    return bool(i in set(interior_vertices(p, margin).tolist()))


def load_packing(path: str) -> Packing:
    """
    Lê um empacotamento em JSON.

    Raises:
        PackingError: Se o arquivo é inválido
    """
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return Packing.from_json_dict(data)
    except (ValueError, KeyError, ValidationError) as e:
        raise PackingError(f"Arquivo de empacotamento inválido {path}: {str(e)}")


def save_packing(p: Packing, path: str) -> None:
    """Grava um empacotamento em JSON."""
    Path(path).write_text(json.dumps(p.to_json_dict()), encoding="utf-8")


def fcc_cell_volume() -> float:
    """Volume do dodecaedro rômbico, célula de Voronoi do CFC."""
    return 4.0 * math.sqrt(2.0)
