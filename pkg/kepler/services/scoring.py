"""
Funções de peso e pontuação.

Compressão Γ, vor e vor truncado, μ, as regras S1-S4 de Hales-Ferguson e os
esquemas de Voronoi, Fejes-Tóth, Hsiang e Hales-Delaunay. O `Scorer` monta a
estrela de decomposição de cada vértice interior, com a divisão por clusters
do mapa planar no esquema HF, e verifica a identidade de admissibilidade.
"""

import math
import threading
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.spatial import Delaunay, QhullError

from kepler.core.config import settings
from kepler.core.logging import LoggerMixin, log_check_event, log_pipeline_event
from kepler.models.decomposition import DTetra, SimplexKind, TetraKey, VCell
from kepler.models.geometry import EDGE_PAIRS, ConvexPolyhedron, Region, Tetra
from kepler.models.oracle import OracleAgreement
from kepler.models.packing import Packing
from kepler.models.scoring import (
    AdmissibilityReport,
    Branch,
    ClusterScore,
    Constants,
    DecouplingReport,
    DensityCheck,
    FaceCheck,
    NegativeSelfWeight,
    RegionScore,
    Residual,
    SchemeName,
    SchemeSummary,
    ScoreScheme,
    StarScore,
    SweepResult,
)
from kepler.services.decomposition import Decomposer, DecompositionError
from kepler.services.geometry import (
    DegenerateGeometryError,
    GeometryError,
    ball_polytope_volume,
    bisector_halfspace,
    box_halfspaces,
    circumcenter,
    clip_with_halfspaces,
    cm_volume,
    cone_halfspaces,
    covered_volume,
    delta,
    face_circumradius,
    halfspace_cell,
    intersection_volume,
    make_tetra,
    polyhedron_from_halfspaces,
    rogers_lengths,
    rogers_pieces,
    signed_volume,
    solid_angle,
    solid_angle_from_lengths,
    subtract_all,
    tetra_from_lengths,
    tetra_halfspaces,
    tetra_polyhedron,
)
from kepler.services.oracle import MonteCarloOracle, derive_rng
from kepler.services.packing import gen_dodecahedral, interior_vertices
from kepler.services.planar_map import PlanarMapBuilder

DELAUNAY_NEIGHBORHOOD = 8.0
DELAUNAY_JITTER = 1e-9
CLUSTER_TOLERANCE = 1e-9
ADMISSIBILITY_TOLERANCE = 1e-8

Vor0 = Callable[[Tetra, int], float]


class ScoringError(Exception):
    """Erro específico da pontuação."""
    pass


class LocalityError(ScoringError):
    """Vértice perto demais da fronteira para ter estrela determinada."""
    pass


class SimplexKindError(ScoringError):
    """Tetraedro de classe inesperada para a fórmula pedida."""
    pass


class RuleClassificationError(ScoringError):
    """Região sem regra de pontuação aplicável ao vértice."""
    pass


def region_label(prefix: str, key: Sequence[int]) -> str:
    """Identificador de região, p.ex. `tetra:3-7-8-12`."""
    return prefix + ":" + "-".join(str(int(i)) for i in key)


# === COMPRESSÃO ===

def tetra_compression(t: Tetra) -> float:
    """
    Γ(T) = Σ Sol(T, v_i)/3 − δ_oct·vol(T), com as quatro bolas dos vértices.

    Raises:
        DegenerateGeometryError: Se T é degenerado
    """
    sol = sum(solid_angle(t, i) for i in range(4))
    return sol / 3.0 - Constants.DELTA_OCT * cm_volume(t)


def compression(region: Union[Region, ConvexPolyhedron], centers: np.ndarray) -> float:
    """
    Γ(R) = vol(R ∩ (Ω + B)) − δ_oct·vol(R).

    Args:
        region: Região limitada (ou um único poliedro)
        centers: Centros cujas bolas unitárias cobrem a região

    Returns:
        float: Compressão (aditiva sobre partições)
    """
    r = region if isinstance(region, Region) else Region(pieces=[region])
    return covered_volume(r, centers) - Constants.DELTA_OCT * r.volume


# === VOR ===

def _piece_terms(piece: np.ndarray) -> Tuple[float, float]:
    """Ângulo sólido no vértice 0 e volume de um simplexo de Rogers."""
    lengths = rogers_lengths(piece)
    sol = float(solid_angle_from_lengths(lengths)[0])
    volume = math.sqrt(max(delta(*(lengths**2)), 0.0)) / 12.0
    return sol, volume


def vor(t: Tetra, v: int) -> float:
    """
    vor(T, v) = 4 Σ ±(Sol(R)/3 − δ_oct·vol(R)) sobre os seis simplexos de Rogers.

    Simplexos com sinal negativo entram subtraídos (continuação analítica
    quando o circuncentro ou um circuncentro de face sai do tetraedro).

    Args:
        t: Tetraedro não degenerado
        v: Índice local do vértice (0..3)

    Raises:
        DegenerateGeometryError: Se T é degenerado
    """
    total = 0.0
    for sign, piece in rogers_pieces(t, v):
        if sign == 0.0:
            continue
        sol, volume = _piece_terms(piece)
        total += sign * (sol / 3.0 - Constants.DELTA_OCT * volume)
    return 4.0 * total


def voronoi_piece(t: Tetra, v: int) -> Optional[ConvexPolyhedron]:
    """T̂_v: pontos de T mais próximos de v que dos outros três vértices."""
    p = t.vertices
    rows = [tetra_halfspaces(t)]
    rows += [bisector_halfspace(p[v], p[j])[None, :] for j in range(4) if j != v]
    return polyhedron_from_halfspaces(np.vstack(rows))


def vor_trunc(t: Tetra, v: int, radius: Optional[float] = None) -> float:
    """
    vor truncado na bola B(v, t).

    Soma com sinal sobre os seis simplexos de Rogers, como em `vor`:
    4 Σ ±(vol(R ∩ B(v, min(t, 1))) − δ_oct·vol(R ∩ B(v, t))). A face de R oposta
    a v fica no plano bissetor da aresta, a distância >= 1 de v quando as arestas medem >= 2; então para
    t >= circunraio o valor coincide com `vor`, e com o circuncentro dentro de
    T coincide com 4Γ(T̂_v ∩ B(v, t)).

    Args:
        t: Tetraedro
        v: Índice local do vértice
        radius: Raio de truncamento (padrão: settings.truncation_radius)

    Raises:
        DegenerateGeometryError: Se T é degenerado
    """
    r = settings.truncation_radius if radius is None else float(radius)
    if r <= 0.0:
        return 0.0
    apex = t.vertices[v]
    total = 0.0
    for sign, piece in rogers_pieces(t, v):
        if sign == 0.0:
            continue
        try:
            poly = tetra_polyhedron(make_tetra(piece))
        except (DegenerateGeometryError, QhullError):
            continue
        covered = ball_polytope_volume(poly, apex, min(r, 1.0))
        total += sign * (covered - Constants.DELTA_OCT * ball_polytope_volume(poly, apex, r))
    return 4.0 * total


# === μ ===

def spine_of(t: Tetra) -> Tuple[int, int]:
    """
    Espinha (índices locais) de um tetraedro QL.

    Raises:
        SimplexKindError: Se T não é QL
    """
    eps = settings.geometry_tolerance
    lengths = t.edge_lengths
    k = int(np.argmax(lengths))
    others = np.delete(lengths, k)
    if not (Constants.SHORT_EDGE < lengths[k] <= Constants.SPINE_MAX + eps):
        raise SimplexKindError(f"Aresta mais longa {lengths[k]:.6f} fora de (2.51, 2√2]")
    if np.any(others < 2.0 - eps) or np.any(others > Constants.SHORT_EDGE + eps):
        raise SimplexKindError("Tetraedro QL exige cinco arestas em [2, 2.51]")
    return EDGE_PAIRS[k]


def eta_plus(t: Tetra, spine: Optional[Tuple[int, int]] = None) -> float:
    """Maior circunraio das duas faces adjacentes à espinha."""
    a, b = spine_of(t) if spine is None else spine
    p = t.vertices
    return max(face_circumradius(p[a], p[b], p[c]) for c in range(4) if c not in (a, b))


def _mu(t: Tetra, v: int, spine: Tuple[int, int]) -> Tuple[float, Branch]:
    if eta_plus(t, spine) <= Constants.ETA_THRESHOLD + settings.geometry_tolerance:
        return tetra_compression(t), Branch.GAMMA
    return vor(t, v), Branch.VOR


def mu(t: Tetra, v: int, spine: Optional[Tuple[int, int]] = None) -> float:
    """
    μ(T, v) = Γ(T) se η⁺(T) <= √2, senão vor(T, v).

    Raises:
        SimplexKindError: Se T não é QL
    """
    return _mu(t, v, spine_of(t) if spine is None else spine)[0]


# === REGRAS HF ===

def score_hf(
    region: Union[VCell, DTetra],
    v: int,
    vor0: Optional[Vor0] = None,
) -> RegionScore:
    """
    Peso σ_HF(R, v) de uma V-célula ou de um tetraedro do sistema D.

    Args:
        region: V-célula ou tetraedro D (com índices de empacotamento)
        v: Índice do vértice no empacotamento
        vor0: Avaliador de vor truncado (padrão: `vor_trunc` sem cache)

    Returns:
        RegionScore: Peso, ramo e regra (S1-S4)

    Raises:
        RuleClassificationError: Se nenhuma regra se aplica ao par (R, v)
    """
    if isinstance(region, VCell):
        weight = 0.0
        if region.owner == v:
            weight = 4.0 * (region.covered_volume - Constants.DELTA_OCT * region.volume)
        return RegionScore(region=f"v_cell:{region.owner}", weight=weight, branch=Branch.V_CELL, rule="S1")
    if not isinstance(region, DTetra):
        raise RuleClassificationError(f"Região de tipo {type(region).__name__} sem regra HF")

    t = region.tetra
    if t.indices is None or v not in t.indices:
        raise RuleClassificationError(f"Vértice {v} não pertence ao tetraedro {t.indices}")
    label = region_label("tetra", region.key)
    i = t.indices.index(v)

    if region.kind == SimplexKind.QR:
        _, radius = circumcenter(t)
        if radius <= Constants.QR_CIRCUMRADIUS:
            return RegionScore(region=label, weight=tetra_compression(t), branch=Branch.GAMMA, rule="S2")
        return RegionScore(region=label, weight=vor(t, i), branch=Branch.VOR, rule="S2")

    if region.spine is None:
        raise RuleClassificationError(f"Tetraedro QL {region.key} sem espinha")
    spine = (t.indices.index(region.spine[0]), t.indices.index(region.spine[1]))
    value, branch = _mu(t, i, spine)
    if i not in spine:
        return RegionScore(region=label, weight=value, branch=branch, rule="S3")
    if region.isolated:
        return RegionScore(region=label, weight=value, branch=branch, rule="S4:isolated")

    j = spine[1] if i == spine[0] else spine[0]
    average = 0.5 * (value + _mu(t, j, spine)[0])
    if region.in_q_octahedron:
        return RegionScore(region=label, weight=average, branch=branch, rule="S4:octahedron")
    evaluate = vor0 or (lambda tt, k: vor_trunc(tt, k))
    weight = average + 0.5 * (evaluate(t, i) - evaluate(t, j))
    return RegionScore(region=label, weight=weight, branch=Branch.VOR_TRUNC, rule="S4:shared")


# === PONTUAÇÃO ===

class Scorer(LoggerMixin):
    """
    Estrelas de decomposição de um empacotamento.

    Compartilha um `Decomposer` e um `PlanarMapBuilder`; memoriza vor
    truncado por (tetraedro, vértice), estatísticas de Voronoi por vértice e
    estrelas pela vizinhança relativa arredondada dentro de `star_radius`.
    """

    def __init__(
        self,
        packing: Packing,
        decomposer: Optional[Decomposer] = None,
        margin: Optional[float] = None,
        seed: Optional[int] = None,
        threads: Optional[int] = None,
    ):
        self.packing = packing
        self.decomposer = decomposer or Decomposer(packing)
        self.planar = PlanarMapBuilder(self.decomposer)
        self.centers = packing.centers
        self.index = self.decomposer.index
        self.seed = settings.seed if seed is None else int(seed)
        self.threads = settings.threads if threads is None else int(threads)
        self.eps = settings.geometry_tolerance
        self.interior = frozenset(int(i) for i in interior_vertices(packing, margin))
        self._vor0: Dict[Tuple[TetraKey, int], float] = {}
        self._voronoi: Dict[int, Tuple[float, float, float]] = {}
        self._stars: Dict[Tuple[str, bytes], Tuple[StarScore, np.ndarray]] = {}
        self._jitter: Optional[np.ndarray] = None
        self._lock = threading.Lock()

    # === LOCALIDADE ===

    def check_locality(self, v: int) -> None:
        """
        Raises:
            LocalityError: Se v não é vértice interior
        """
        if int(v) not in self.interior:
            raise LocalityError(f"Vértice {v} não é interior ao domínio")

    def _signature(self, v: int) -> Tuple[bytes, np.ndarray]:
        """Vizinhança relativa arredondada e os índices na mesma ordem."""
        idx = self.index.within(self.centers[v], settings.star_radius)
        rel = np.round(self.centers[idx] - self.centers[v], 9) + 0.0
        order = np.lexsort(rel.T[::-1])
        return rel[order].tobytes(), np.asarray(idx)[order]

    @staticmethod
    def _relabel(star: StarScore, source: np.ndarray, target: np.ndarray, v: int) -> StarScore:
        mapping = {int(a): int(b) for a, b in zip(source, target)}
        regions = []
        for r in star.regions:
            prefix, ids = r.region.split(":", 1)
            moved = [mapping.get(int(i), int(i)) for i in ids.split("-")]
            key = sorted(moved) if prefix in ("tetra", "simplex") else moved
            regions.append(r.model_copy(update={"region": region_label(prefix, key)}))
        return star.model_copy(update={"vertex": v, "regions": regions, "cached": True})

    # === ESTRELAS ===

    def score_star(self, v: int, scheme: ScoreScheme) -> StarScore:
        """
        Pontuação Score(D(v)) da estrela de v no esquema dado.

        Args:
            v: Vértice interior
            scheme: Esquema de pontuação

        Returns:
            StarScore: Total com detalhamento por região (e por cluster no HF)

        Raises:
            LocalityError: Se v não é interior
            ScoringError: Se a geometria subjacente falha
        """
        v = int(v)
        self.check_locality(v)
        signature, neighborhood = self._signature(v)
        cache_key = (scheme.label, signature)
        cached = self._stars.get(cache_key)
        if cached is not None:
            return self._relabel(cached[0], cached[1], neighborhood, v)
        try:
            if scheme.name == SchemeName.HF:
                star = self._star_hf(v)
            elif scheme.name == SchemeName.VORONOI:
                star = self._star_voronoi(v, scheme)
            elif scheme.name == SchemeName.FEJES_TOTH:
                star = self._star_fejes_toth(v, scheme)
            elif scheme.name == SchemeName.HSIANG:
                star = self._star_hsiang(v, scheme)
            else:
                star = self._star_delaunay(v, scheme)
        except (GeometryError, DecompositionError) as e:
            self.logger.error(
                "star_scoring_failed", vertex=v, scheme=scheme.label, error=str(e), error_type=type(e).__name__
            )
            raise ScoringError(f"Falha ao pontuar o vértice {v}: {str(e)}")
        with self._lock:
            self._stars.setdefault(cache_key, (star, neighborhood))
        log_pipeline_event("star_scored", stage="score", vertex=v, scheme=scheme.label, total=star.total)
        return star

    def score_vertices(self, scheme: ScoreScheme, vertices: Optional[Iterable[int]] = None) -> List[StarScore]:
        """Estrelas de vários vértices em paralelo, ordenadas por vértice."""
        verts = sorted(self.interior) if vertices is None else sorted(int(v) for v in vertices)
        if self.threads <= 1 or len(verts) <= 1:
            return [self.score_star(v, scheme) for v in verts]
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            stars = list(pool.map(lambda v: self.score_star(v, scheme), verts))
        return sorted(stars, key=lambda s: s.vertex)

    def vor0(self, t: Tetra, local: int) -> float:
        """vor truncado memorizado por (tetraedro, vértice)."""
        key = (tuple(sorted(t.indices)), t.indices[local])  # type: ignore[arg-type]
        if key not in self._vor0:
            value = vor_trunc(t, local)
            with self._lock:
                self._vor0.setdefault(key, value)  # type: ignore[arg-type]
        return self._vor0[key]  # type: ignore[index]

    def hf_weight(self, d: DTetra, v: int) -> RegionScore:
        return score_hf(d, v, self.vor0)

    def _star_hf(self, v: int) -> StarScore:
        d = self.decomposer
        regions = [self.hf_weight(t, v) for t in d.d_tetras_at(v)]
        by_key = {r.region: r.weight for r in regions}
        cell = d.v_cell(v, explicit=True)
        regions.append(score_hf(cell, v))

        clusters = []
        for cluster in self.planar.clusters(v, cell=cell, seed=self.seed):
            tetra_part = sum(by_key[region_label("tetra", key)] for key in cluster.d_tetras)
            clusters.append(
                ClusterScore(
                    face_index=cluster.face_index,
                    sides=cluster.sides,
                    score=tetra_part + 4.0 * cluster.v_cell_compression,
                    exact=cluster.exact,
                )
            )
        total = float(sum(r.weight for r in regions))
        star = StarScore(vertex=v, scheme=SchemeName.HF.value, total=total, regions=regions, clusters=clusters)
        if all(c.exact for c in clusters):
            gap = abs(star.cluster_total - total)
            if gap > CLUSTER_TOLERANCE:
                log_check_event("cluster_total_mismatch", check="cluster_total", passed=False, vertex=v, gap=gap)
        return star

    # === CÉLULAS DE VORONOI ===

    def voronoi_stats(self, w: int) -> Tuple[float, float, float]:
        """(volume, volume coberto, alcance) da célula de Voronoi de w."""
        if w not in self._voronoi:
            cell = self.decomposer.voronoi_cell(w)
            reach = float(np.linalg.norm(cell.vertices - self.centers[w], axis=1).max())
            stats = (cell.volume, self.decomposer.covered(cell), reach)
            with self._lock:
                self._voronoi.setdefault(w, stats)
        return self._voronoi[w]

    def voronoi_gamma(self, w: int, scheme: ScoreScheme) -> float:
        """(Aρ − B)·vol da célula de Voronoi de w."""
        volume, covered, _ = self.voronoi_stats(w)
        return scheme.a_const * covered - scheme.b_const * volume

    def _star_voronoi(self, v: int, scheme: ScoreScheme) -> StarScore:
        weight = self.voronoi_gamma(v, scheme)
        region = RegionScore(
            region=f"voronoi_cell:{v}", weight=weight, branch=Branch.VORONOI_CELL, rule="voronoi"
        )
        return StarScore(vertex=v, scheme=scheme.label, total=weight, regions=[region])

    def fejes_toth_neighbors(self, v: int, t: float) -> List[int]:
        """Vértices w != v com |w − v| <= 2 + t."""
        idx = self.index.within(self.centers[v], 2.0 + t + self.eps)
        return sorted(int(i) for i in idx if int(i) != v)

    def hsiang_neighbors(self, v: int) -> List[int]:
        """Vértices w != v com |w − v| <= 2.18."""
        idx = self.index.within(self.centers[v], Constants.HSIANG_RADIUS + self.eps)
        return sorted(int(i) for i in idx if int(i) != v)

    def _star_fejes_toth(self, v: int, scheme: ScoreScheme) -> StarScore:
        t = float(scheme.t_param)  # type: ignore[arg-type]
        neighbors = self.fejes_toth_neighbors(v, t)
        self_weight = 1.0 - len(neighbors) / 12.0
        regions = [
            RegionScore(
                region=f"voronoi_cell:{w}",
                weight=self.voronoi_gamma(w, scheme) / 12.0,
                branch=Branch.VORONOI_CELL,
                rule="fejes_toth",
            )
            for w in neighbors
        ]
        regions.append(
            RegionScore(
                region=f"voronoi_cell:{v}",
                weight=self_weight * self.voronoi_gamma(v, scheme),
                branch=Branch.VORONOI_CELL,
                rule="fejes_toth:self",
            )
        )
        if self_weight < 0.0:
            self.logger.warning("negative_self_weight", vertex=v, self_weight=self_weight, neighbors=len(neighbors))
        return StarScore(
            vertex=v,
            scheme=scheme.label,
            total=float(sum(r.weight for r in regions)),
            regions=regions,
            neighbor_count=len(neighbors),
            self_weight=self_weight,
        )

    def _star_hsiang(self, v: int, scheme: ScoreScheme) -> StarScore:
        neighbors = self.hsiang_neighbors(v)
        weight = 1.0 / (1.0 + len(neighbors))
        regions = [
            RegionScore(
                region=f"voronoi_cell:{w}",
                weight=weight * self.voronoi_gamma(w, scheme),
                branch=Branch.VORONOI_CELL,
                rule="hsiang:self" if w == v else "hsiang",
            )
            for w in sorted(neighbors + [v])
        ]
        return StarScore(
            vertex=v,
            scheme=scheme.label,
            total=float(sum(r.weight for r in regions)),
            regions=regions,
            neighbor_count=len(neighbors),
            self_weight=weight,
        )

    # === DELAUNAY ===

    def delaunay_simplices(self, v: int) -> List[Tetra]:
        """
        Simplexos de Delaunay incidentes a v, triangulando a vizinhança de raio 8.

        Os pontos recebem uma perturbação semeada de 1e-9 por índice, igual em
        todas as vizinhanças; Γ é calculado nas coordenadas originais e
        simplexos de volume nulo são descartados.

        Raises:
            ScoringError: Se o qhull falha
        """
        if self._jitter is None:
            rng = derive_rng(self.seed, self.packing.size)
            self._jitter = rng.normal(scale=DELAUNAY_JITTER, size=self.centers.shape)
            self.logger.warning("delaunay_jitter_applied", scale=DELAUNAY_JITTER, seed=self.seed)
        idx = np.sort(self.index.within(self.centers[v], DELAUNAY_NEIGHBORHOOD))
        if len(idx) < 5:
            return []
        try:
            tri = Delaunay(self.centers[idx] + self._jitter[idx])
        except QhullError as e:
            raise ScoringError(f"Delaunay falhou na vizinhança de {v}: {str(e)}")
        local = int(np.flatnonzero(idx == v)[0])
        simplices = []
        dropped = 0
        for simplex in tri.simplices[np.any(tri.simplices == local, axis=1)]:
            indices = tuple(sorted(int(idx[k]) for k in simplex))
            points = self.centers[list(indices)]
            scale = float(np.linalg.norm(points - points.mean(axis=0), axis=1).max())
            if abs(signed_volume(*points)) <= self.eps * scale**3:
                dropped += 1
                continue
            simplices.append(make_tetra(points, indices))
        if dropped:
            self.logger.debug("delaunay_flat_simplices_dropped", vertex=v, dropped=dropped)
        return sorted(simplices, key=lambda s: s.key)

    def _star_delaunay(self, v: int, scheme: ScoreScheme) -> StarScore:
        regions = [
            RegionScore(
                region=region_label("simplex", s.key),
                weight=scheme.a_const / 4.0 * tetra_compression(s),
                branch=Branch.GAMMA,
                rule="hales_delaunay",
            )
            for s in self.delaunay_simplices(v)
        ]
        return StarScore(
            vertex=v, scheme=scheme.label, total=float(sum(r.weight for r in regions)), regions=regions
        )

    # === ADMISSIBILIDADE ===

    def check_admissibility(
        self, scheme: ScoreScheme, vertices: Optional[Iterable[int]] = None
    ) -> AdmissibilityReport:
        """
        Verifica Σ_v σ(R, v) = (Aρ(R) − B)·vol(R) para as regiões das estrelas dadas.

        Args:
            scheme: Esquema
            vertices: Vértices cujas regiões são examinadas (padrão: interiores)

        Returns:
            AdmissibilityReport: Resíduos, falhas e raio de localidade observado
        """
        verts = sorted(self.interior) if vertices is None else sorted(int(v) for v in vertices)
        residuals: List[Residual] = []
        reach = 0.0
        notes: List[str] = []

        if scheme.name == SchemeName.HF:
            seen: Dict[TetraKey, DTetra] = {}
            for v in verts:
                for d in self.decomposer.d_tetras_at(v):
                    seen.setdefault(d.key, d)
            for key, d in sorted(seen.items()):
                weights = [self.hf_weight(d, u) for u in key]
                total = sum(w.weight for w in weights)
                expected = scheme.a_const * tetra_compression(d.tetra)
                residuals.append(self._residual(region_label("tetra", key), total - expected, 1e-9))
                reach = max(reach, float(d.tetra.edge_lengths.max()))
            # V-células pertencem só ao dono: σ = AΓ por definição, sem resíduo
            for v in verts:
                reach = max(reach, self.voronoi_stats(v)[2])
        elif scheme.name == SchemeName.HALES_DELAUNAY:
            simplices: Dict[TetraKey, Tetra] = {}
            for v in verts:
                for s in self.delaunay_simplices(v):
                    simplices.setdefault(s.key, s)  # type: ignore[arg-type]
            for key, s in sorted(simplices.items()):
                gamma = tetra_compression(s)
                total = 0.0
                for u in key:
                    if any(o.key == key for o in self.delaunay_simplices(u)):
                        total += scheme.a_const / 4.0 * gamma
                residuals.append(self._residual(region_label("simplex", key), total - scheme.a_const * gamma, 1e-9))
                reach = max(reach, float(s.edge_lengths.max()))
        else:
            for w in verts:
                gamma = self.voronoi_gamma(w, scheme)
                weight = sum(self._cell_weight(w, u, scheme) for u in self._cell_sharers(w, scheme))
                residuals.append(
                    self._residual(f"voronoi_cell:{w}", weight * gamma - gamma, ADMISSIBILITY_TOLERANCE)
                )
                sharers = self._cell_sharers(w, scheme)
                spread = float(np.linalg.norm(self.centers[sharers] - self.centers[w], axis=1).max())
                reach = max(reach, spread + self.voronoi_stats(w)[2])
            if scheme.name == SchemeName.HSIANG:
                notes.append("pesos de Hsiang dependem de N(v) e não somam 1 em geral")

        failures = [r for r in residuals if not r.passed]
        report = AdmissibilityReport(
            scheme=scheme.label,
            regions_checked=len(residuals),
            max_residual=max((abs(r.residual) for r in residuals), default=0.0),
            failures=failures,
            locality_radius=reach,
            notes=notes,
        )
        log_check_event(
            "admissibility_checked",
            check="admissibility",
            passed=report.passed,
            scheme=scheme.label,
            regions=report.regions_checked,
            max_residual=report.max_residual,
        )
        return report

    @staticmethod
    def _residual(region: str, residual: float, tolerance: float) -> Residual:
        return Residual(region=region, residual=residual, tolerance=tolerance, passed=abs(residual) <= tolerance)

    def _cell_sharers(self, w: int, scheme: ScoreScheme) -> List[int]:
        """Vértices v com ω(w, v) possivelmente não nulo (inclui w)."""
        if scheme.name == SchemeName.FEJES_TOTH:
            return sorted(self.fejes_toth_neighbors(w, float(scheme.t_param)) + [w])  # type: ignore[arg-type]
        if scheme.name == SchemeName.HSIANG:
            return sorted(self.hsiang_neighbors(w) + [w])
        return [w]

    def _cell_weight(self, w: int, v: int, scheme: ScoreScheme) -> float:
        """ω(w, v) do esquema."""
        if scheme.name == SchemeName.FEJES_TOTH:
            t = float(scheme.t_param)  # type: ignore[arg-type]
            if v == w:
                return 1.0 - len(self.fejes_toth_neighbors(v, t)) / 12.0
            return 1.0 / 12.0
        if scheme.name == SchemeName.HSIANG:
            return 1.0 / (1.0 + len(self.hsiang_neighbors(v)))
        return 1.0 if v == w else 0.0

    def negative_self_weights(
        self, t: Optional[float] = None, vertices: Optional[Iterable[int]] = None
    ) -> List[NegativeSelfWeight]:
        """Vértices com ω(v, v) < 0 no esquema de Fejes-Tóth."""
        t = settings.fejes_toth_t if t is None else t
        verts = sorted(self.interior) if vertices is None else sorted(int(v) for v in vertices)
        found = []
        for v in verts:
            n = len(self.fejes_toth_neighbors(v, t))
            if n > 12:
                found.append(NegativeSelfWeight(vertex=v, self_weight=1.0 - n / 12.0, neighbors=n))
        return found

    # === DESACOPLAMENTO E TRUNCAMENTO ===

    def check_decoupling_truncation(self, v: int) -> DecouplingReport:
        """
        Verifica, em cada face convexa F de G(v), que a parte da V-célula no cone
        C_F coincide com a célula de Voronoi dos vértices do cone fechado menos
        os cones sobre os conjuntos D com canto em v, e que truncar em 1.255 não
        diminui Γ.

        Raises:
            LocalityError: Se v não é interior
        """
        self.check_locality(v)
        d = self.decomposer
        pm = self.planar.planar_map(v)
        cell = d.v_cell(v, explicit=True)
        pieces = [p.polyhedron for p in cell.pieces or []]
        apex = self.centers[v]
        radius = settings.truncation_radius

        d_tetras = d.d_tetras_at(v)
        located = np.array([], dtype=int)
        if d_tetras:
            centroids = np.array([t.tetra.vertices.mean(axis=0) - apex for t in d_tetras])
            located = self.planar.face_of(pm, centroids / np.linalg.norm(centroids, axis=1)[:, None])
        nearby = self.index.within(apex, 2.0 * Constants.VORONOI_DIAMETER)

        faces = []
        for index, face in enumerate(pm.faces):
            if not face.convex or len(face.cycles) != 1:
                faces.append(FaceCheck(face_index=index, sides=face.sides, convex=face.convex, checked=False))
                continue
            cone = cone_halfspaces(apex, [pm.directions[k] for k in face.cycles[0]])
            first = [p for p in (clip_with_halfspaces(piece, cone) for piece in pieces) if p is not None]

            points = self.centers[nearby]
            in_cone = np.all(points @ cone[:, :3].T + cone[:, 3] <= self.eps, axis=1)
            members = [int(w) for w in nearby[in_cone] if int(w) != v]
            voronoi = halfspace_cell(apex, self.centers[members], d.clip_box)
            base = clip_with_halfspaces(voronoi, cone)
            removals = []
            for t, where in zip(d_tetras, located):
                if int(where) != index:
                    continue
                corner = t.tetra.indices.index(v)  # type: ignore[union-attr]
                dirs = [t.tetra.vertices[k] - apex for k in range(4) if k != corner]
                if np.linalg.det(np.array(dirs)) < 0:
                    dirs = [dirs[0], dirs[2], dirs[1]]
                dirs = [x / np.linalg.norm(x) for x in dirs]
                shadow = polyhedron_from_halfspaces(
                    np.vstack([cone_halfspaces(apex, dirs), box_halfspaces(d.clip_box)])
                )
                if shadow is not None:
                    removals.append(shadow)
            second = subtract_all([base], removals) if base is not None else []

            overlap = sum(intersection_volume(a, b) for a in first for b in second)
            sym_diff = sum(p.volume for p in first) + sum(p.volume for p in second) - 2.0 * overlap
            gamma = sum(d.covered(p) - Constants.DELTA_OCT * p.volume for p in first)
            gamma_trunc = sum(
                ball_polytope_volume(p, apex, 1.0) - Constants.DELTA_OCT * ball_polytope_volume(p, apex, radius)
                for p in first
            )
            gap = abs(
                sum(ball_polytope_volume(p, apex, radius) for p in first)
                - sum(ball_polytope_volume(p, apex, radius) for p in second)
            )
            passed = sym_diff < 1e-6 and gamma_trunc >= gamma - 1e-9 and gap < 1e-6
            faces.append(
                FaceCheck(
                    face_index=index,
                    sides=face.sides,
                    convex=True,
                    checked=True,
                    symmetric_difference=sym_diff,
                    gamma=gamma,
                    gamma_trunc=gamma_trunc,
                    truncated_identity_gap=gap,
                    passed=passed,
                )
            )
        report = DecouplingReport(vertex=v, faces=faces)
        log_check_event(
            "decoupling_checked", check="decoupling", passed=report.passed, vertex=v, faces=len(faces)
        )
        return report

    # === ORÁCULO ===

    def oracle_agreement(
        self, pieces: int = 50, samples: Optional[int] = None, vertices: Optional[Iterable[int]] = None
    ) -> List[OracleAgreement]:
        """
        Compara Γ analítico com `mc_compression` em peças sorteadas: tetraedros
        D (bolas dos vértices) e células de Voronoi (bolas próximas).

        Args:
            pieces: Número máximo de peças sorteadas
            samples: Amostras por estimativa (padrão: settings.mc_samples)
            vertices: Vértices de onde saem as peças (padrão: interiores)
        """
        verts = sorted(self.interior) if vertices is None else sorted(int(v) for v in vertices)
        candidates: Dict[str, Tuple[str, object]] = {}
        for v in verts:
            for d in self.decomposer.d_tetras_at(v):
                candidates.setdefault(region_label("tetra", d.key), ("tetra", d))
            candidates.setdefault(f"voronoi_cell:{v}", ("cell", v))
        labels = sorted(candidates)
        if not labels:
            return []
        rng = derive_rng(self.seed, 4099)
        chosen = sorted(rng.choice(len(labels), size=min(pieces, len(labels)), replace=False).tolist())
        oracle = MonteCarloOracle(seed=self.seed, samples=samples)

        results = []
        for k in chosen:
            label = labels[k]
            kind, item = candidates[label]
            if kind == "tetra":
                d: DTetra = item  # type: ignore[assignment]
                analytic = tetra_compression(d.tetra)
                estimate = oracle.mc_compression(tetra_polyhedron(d.tetra), d.tetra.vertices, seed=self.seed + k)
            else:
                w = int(item)  # type: ignore[call-overload]
                volume, covered, reach = self.voronoi_stats(w)
                analytic = covered - Constants.DELTA_OCT * volume
                idx = self.index.within(self.centers[w], reach + 1.0 + self.eps)
                estimate = oracle.mc_compression(
                    self.decomposer.voronoi_cell(w), self.centers[idx], seed=self.seed + k
                )
            results.append(OracleAgreement(subject=label, analytic=analytic, estimate=estimate))
        failed = [r.subject for r in results if not r.passed]
        log_check_event(
            "oracle_agreement_checked", check="oracle", passed=not failed, pieces=len(results), failed=failed
        )
        return results

    # === RESUMOS ===

    def summarize(self, stars: Sequence[StarScore], scheme: ScoreScheme) -> SchemeSummary:
        """
        Resumo de um esquema: máximo, média e observações por tipo de cluster.

        Raises:
            ScoringError: Se não há estrelas
        """
        if not stars:
            raise ScoringError("Nenhuma estrela para resumir")
        best = max(stars, key=lambda s: (s.total, -s.vertex))
        extras: Dict[str, float] = {}
        if scheme.name == SchemeName.HF:
            clusters = [c for s in stars for c in s.clusters]
            for name, keep in (
                ("max_triangle_cluster", lambda c: c.sides == 3),
                ("max_quad_cluster", lambda c: c.sides == 4),
                ("max_large_cluster", lambda c: c.sides >= 5),
            ):
                scores = [c.score for c in clusters if keep(c)]
                if scores:
                    extras[name] = max(scores)
        if scheme.name in (SchemeName.FEJES_TOTH, SchemeName.HSIANG):
            extras["min_self_weight"] = min(s.self_weight for s in stars)  # type: ignore[type-var]
            extras["mean_neighbor_count"] = float(np.mean([s.neighbor_count for s in stars]))
        return SchemeSummary(
            scheme=scheme.label,
            vertices=len(stars),
            max_score=best.total,
            argmax_vertex=best.vertex,
            mean_score=float(np.mean([s.total for s in stars])),
            extras=extras,
        )


# === VARREDURAS E CONSTANTES ===

def compression_sweep(kind: str, n: int, seed: Optional[int] = None) -> SweepResult:
    """
    Perturbações aleatórias do tetraedro extremal de uma classe.

    "qr": seis arestas 2 + U[0, 0.51], referência pt. "ql": cinco arestas
    2 + U[0, 0.51] e espinha 2√2 − U[0, 2√2 − 2.51), referência 0. A primeira
    amostra é o próprio extremal.

    Args:
        kind: "qr" ou "ql"
        n: Número de perturbações
        seed: Semente (padrão: settings.seed)

    Raises:
        SimplexKindError: Se a classe é desconhecida
    """
    seed = settings.seed if seed is None else int(seed)
    kind = kind.lower()
    spread = Constants.SHORT_EDGE - 2.0
    if kind == "qr":
        base, reference = np.full(6, 2.0), Constants.PT
    elif kind == "ql":
        base, reference = np.array([Constants.SPINE_MAX, 2.0, 2.0, 2.0, 2.0, 2.0]), 0.0
    else:
        raise SimplexKindError(f"Classe de varredura desconhecida: {kind}")
    rng = derive_rng(seed, 0 if kind == "qr" else 1)

    worst = (-math.inf, base)
    exceedances = 0
    accepted = 0
    candidate = base
    while accepted < n + 1:
        try:
            gamma = tetra_compression(tetra_from_lengths(candidate))
        except DegenerateGeometryError:
            gamma = None
        if gamma is not None:
            accepted += 1
            if gamma > worst[0]:
                worst = (gamma, candidate)
            if gamma > reference + 1e-9:
                exceedances += 1
        step = rng.random(6) * spread
        if kind == "ql":
            step[0] = -rng.random() * (Constants.SPINE_MAX - Constants.SHORT_EDGE)
        candidate = base + step

    result = SweepResult(
        kind=kind,
        samples=n,
        seed=seed,
        max_gamma=worst[0],
        reference=reference,
        exceedances=exceedances,
        worst_lengths=[float(x) for x in worst[1]],
    )
    log_check_event(
        "compression_sweep_done", check=f"sweep_{kind}", passed=result.passed, max_gamma=result.max_gamma
    )
    return result


def dodecahedral_density_check() -> DensityCheck:
    """Densidade da célula de Voronoi da configuração dodecaédrica contra 0.754697."""
    packing = gen_dodecahedral()
    decomposer = Decomposer(packing)
    origin = int(np.argmin(np.linalg.norm(packing.centers, axis=1)))
    cell = decomposer.voronoi_cell(origin)
    check = DensityCheck(
        name="dodecahedral",
        value=Constants.KAPPA3 / cell.volume,
        expected=Constants.DODECAHEDRAL_DENSITY,
        tolerance=1e-5,
    )
    log_check_event("dodecahedral_density", check="dodecahedral", passed=check.passed, value=check.value)
    return check


def score_star(p: Packing, v: int, scheme: ScoreScheme, margin: Optional[float] = None) -> StarScore:
    """Pontua um único vértice (ver `Scorer.score_star`)."""
    return Scorer(p, margin=margin).score_star(v, scheme)


def check_admissibility(p: Packing, scheme: ScoreScheme, margin: Optional[float] = None) -> AdmissibilityReport:
    """Admissibilidade sobre os vértices interiores (ver `Scorer.check_admissibility`)."""
    return Scorer(p, margin=margin).check_admissibility(scheme)


def check_decoupling_truncation(p: Packing, v: int, margin: Optional[float] = None) -> DecouplingReport:
    return Scorer(p, margin=margin).check_decoupling_truncation(v)
