"""
Partição híbrida de Hales-Ferguson.

Enumeração de tetraedros QR/QL, octaedros Q e âncoras; seleção do sistema D
pelas regras QL0-QL3; pontas e regra de rearranjo; células de Voronoi e
V-células. Tudo é calculado sob demanda e memorizado, de modo que pontuar um
vértice interior só toca a vizinhança de raio 12√2.
"""

import threading
from itertools import combinations
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

from kepler.core.config import settings
from kepler.core.logging import LoggerMixin, log_anomaly_event, log_check_event, log_pipeline_event
from kepler.models.decomposition import (
    AdmittingRule,
    Anomaly,
    AnomalyKind,
    ClassifiedTetra,
    CoverageReport,
    DSystem,
    DTetra,
    StructuralCheck,
    PieceProvenance,
    QOctahedron,
    SimplexKind,
    Spine,
    SpineKey,
    TetraKey,
    Tip,
    TipCoverage,
    VCell,
    VCellPiece,
)
from kepler.models.geometry import ConvexPolyhedron
from kepler.models.packing import Box, Packing
from kepler.models.scoring import Constants
from kepler.services.geometry import (
    GeometryError,
    barycentric,
    bisector_halfspace,
    circumcenter,
    covered_volume,
    halfspace_cell,
    intersect,
    make_tetra,
    polyhedron_from_halfspaces,
    region_from,
    subtract_all,
    tetra_halfspaces,
    tetra_overlap_volume,
    tetra_polyhedron,
)
from kepler.services.oracle import MonteCarloOracle
from kepler.services.packing import NeighborIndex, interior_vertices

SPINE_PAIRINGS = (((0, 1), (2, 3)), ((0, 2), (1, 3)), ((0, 3), (1, 2)))


class DecompositionError(Exception):
    """Erro específico da partição híbrida."""
    pass


class DSystemConsistencyError(DecompositionError):
    """Sistema D com sobreposição ou violação da condição de espinha comum."""
    pass


class TipOverlapError(DecompositionError):
    """Duas pontas descobertas se sobrepõem."""

    def __init__(self, message: str, first: Tip, second: Tip):
        super().__init__(message)
        self.first = first
        self.second = second


def spine_label(key: SpineKey) -> str:
    return f"{key[0]}-{key[1]}"


class Decomposer(LoggerMixin):
    """
    Construtor preguiçoso da partição de um empacotamento.

    Todas as consultas são memorizadas por vértice, espinha ou tetraedro. As
    caches só recebem valores determinísticos, de modo que o objeto pode ser
    compartilhado por threads que pontuam vértices distintos.
    """

    def __init__(self, packing: Packing, index: Optional[NeighborIndex] = None):
        self.packing = packing
        self.centers = packing.centers
        self.index = index or NeighborIndex(packing)
        self.eps = settings.geometry_tolerance
        self.overlap_tol = settings.overlap_volume_tolerance
        self.clip_box = packing.domain.inflated(settings.clip_inflation)
        self._short: Dict[int, FrozenSet[int]] = {}
        self._long: Dict[int, FrozenSet[int]] = {}
        self._tetras_at: Dict[int, List[ClassifiedTetra]] = {}
        self._tetras: Dict[TetraKey, ClassifiedTetra] = {}
        self._spines: Dict[SpineKey, Spine] = {}
        self._octahedra: Dict[SpineKey, Optional[QOctahedron]] = {}
        self._decisions: Dict[SpineKey, Tuple[bool, AdmittingRule]] = {}
        self._overlaps: Dict[TetraKey, List[ClassifiedTetra]] = {}
        self._tips: Dict[TetraKey, Optional[Tip]] = {}
        self._cells: Dict[Tuple[int, FrozenSet[int]], ConvexPolyhedron] = {}
        self._polys: Dict[TetraKey, ConvexPolyhedron] = {}
        self._anomaly_keys: Set[Tuple[str, Tuple[int, ...]]] = set()
        self._lock = threading.Lock()
        self.anomalies: List[Anomaly] = []

    # === ANOMALIAS ===

    def record_anomaly(
        self, kind: AnomalyKind, message: str, vertices: Iterable[int], value: Optional[float] = None
    ) -> None:
        verts = tuple(int(v) for v in vertices)
        with self._lock:
            if (kind.value, verts) in self._anomaly_keys:
                return
            self._anomaly_keys.add((kind.value, verts))
            self.anomalies.append(Anomaly(kind=kind, message=message, vertices=list(verts), value=value))
        log_anomaly_event("decomposition_anomaly", kind=kind.value, vertices=list(verts), value=value)

    # === GRAFO DE ARESTAS CURTAS ===

    def short(self, i: int) -> FrozenSet[int]:
        """Vizinhos a distância <= 2.51 (arestas curtas, fechado)."""
        if i not in self._short:
            idx = self.index.neighbors(i, Constants.SHORT_EDGE + self.eps)
            self._short[i] = frozenset(int(j) for j in idx)
        return self._short[i]

    def spine_partners(self, i: int) -> FrozenSet[int]:
        """Vértices a distância em (2.51, 2√2] de i."""
        if i not in self._long:
            idx = self.index.neighbors(i, Constants.SPINE_MAX + self.eps)
            self._long[i] = frozenset(int(j) for j in idx) - self.short(i)
        return self._long[i]

    def distance(self, i: int, j: int) -> float:
        return float(np.linalg.norm(self.centers[i] - self.centers[j]))

    def is_spine_length(self, d: float) -> bool:
        return Constants.SHORT_EDGE + self.eps < d <= Constants.SPINE_MAX + self.eps

    def lex_key(self, indices: Sequence[int]) -> Tuple[Tuple[float, ...], ...]:
        """Ordem lexicográfica das coordenadas, usada em todos os desempates."""
        return tuple(sorted(tuple(np.round(self.centers[i], 12)) for i in indices))

    # === CLASSIFICAÇÃO ===

    def _classified(
        self, indices: Sequence[int], kind: SimplexKind, spine: Optional[SpineKey] = None
    ) -> ClassifiedTetra:
        key = tuple(sorted(int(i) for i in indices))
        if key not in self._tetras:
            tetra = make_tetra(self.centers[list(key)], key)
            self._tetras[key] = ClassifiedTetra(tetra=tetra, kind=kind, spine=spine)
        return self._tetras[key]

    def tetra_at(self, j: int) -> List[ClassifiedTetra]:
        """
        Todos os tetraedros QR e QL incidentes ao vértice j.

        Returns:
            List[ClassifiedTetra]: Ordenados pela chave de índices
        """
        if j in self._tetras_at:
            return self._tetras_at[j]
        found: Dict[TetraKey, ClassifiedTetra] = {}
        nj = self.short(j)
        ordered = sorted(nj)
        for a, b, c in combinations(ordered, 3):
            sa = self.short(a)
            if b in sa and c in sa and c in self.short(b):
                t = self._classified((j, a, b, c), SimplexKind.QR)
                found[t.key] = t
        for k in sorted(self.spine_partners(j)):
            spine = self.spine((j, k))
            for key in spine.ql_keys:
                found[key] = self._tetras[key]
        for a, b in combinations(ordered, 2):
            if not self.is_spine_length(self.distance(a, b)):
                continue
            spine = self.spine((a, b))
            for key in spine.ql_keys:
                if j in key:
                    found[key] = self._tetras[key]
        result = [found[k] for k in sorted(found)]
        self._tetras_at[j] = result
        return result

    def spine(self, pair: Tuple[int, int]) -> Spine:
        """Espinha com suas âncoras e quartos QL."""
        key = (min(pair), max(pair))
        if key in self._spines:
            return self._spines[key]
        a, b = key
        anchors = sorted(self.short(a) & self.short(b))
        ql_keys = []
        for c, d in combinations(anchors, 2):
            if d in self.short(c):
                t = self._classified((a, b, c, d), SimplexKind.QL, spine=key)
                ql_keys.append(t.key)
        spine = Spine(endpoints=key, length=self.distance(a, b), anchors=anchors, ql_keys=sorted(ql_keys))
        self._spines[key] = spine
        return spine

    def q_octahedron(self, key: SpineKey) -> Optional[QOctahedron]:
        """
        Octaedro Q que tem a espinha como diagonal, se existir.

        As âncoras (exatamente quatro) devem formar um 4-ciclo de arestas
        curtas; as duas diagonais restantes são os pares opostos do ciclo. A
        diagonal escolhida é a mais curta entre as de comprimento <= 2√2, com
        desempate lexicográfico; se ela for curta (<= 2.51), o octaedro é
        particionado em QR e nenhuma diagonal é escolhida.
        """
        if key in self._octahedra:
            return self._octahedra[key]
        spine = self.spine(key)
        octa: Optional[QOctahedron] = None
        if len(spine.anchors) == 4:
            w = spine.anchors
            for pairing in SPINE_PAIRINGS:
                diag_pairs = [(w[i], w[j]) for i, j in pairing]
                cycle = [
                    (w[i], w[j])
                    for i, j in combinations(range(4), 2)
                    if (i, j) not in pairing
                ]
                if all(y in self.short(x) for x, y in cycle):
                    diagonals = sorted([key] + [(min(p), max(p)) for p in diag_pairs])
                    lengths = [self.distance(*d) for d in diagonals]
                    octa = QOctahedron(
                        vertices=tuple(sorted(set(key) | set(w))),  # type: ignore[arg-type]
                        diagonals=diagonals,
                        diagonal_lengths=lengths,
                        chosen=self._choose_diagonal(diagonals, lengths),
                    )
                    break
        self._octahedra[key] = octa
        return octa

    def _choose_diagonal(self, diagonals: List[SpineKey], lengths: List[float]) -> Optional[SpineKey]:
        viable = [(l, d) for l, d in zip(lengths, diagonals) if l <= Constants.SPINE_MAX + self.eps]
        if not viable:
            return None
        shortest = min(l for l, _ in viable)
        if shortest <= Constants.SHORT_EDGE + self.eps:
            return None
        tied = [d for l, d in viable if l <= shortest + self.eps]
        return min(tied, key=self.lex_key)

    def classify_simplices(
        self, vertices: Optional[Iterable[int]] = None
    ) -> Tuple[List[ClassifiedTetra], List[ClassifiedTetra], List[QOctahedron]]:
        """
        Enumera QR, QL e octaedros Q incidentes aos vértices dados.

        Returns:
            Tuple: (QR, QL, octaedros Q), cada lista ordenada e sem repetições
        """
        verts = range(self.packing.size) if vertices is None else vertices
        found: Dict[TetraKey, ClassifiedTetra] = {}
        for v in verts:
            for t in self.tetra_at(int(v)):
                found[t.key] = t
        qr = [t for k, t in sorted(found.items()) if t.kind == SimplexKind.QR]
        ql = [t for k, t in sorted(found.items()) if t.kind == SimplexKind.QL]
        octahedra: Dict[Tuple[int, ...], QOctahedron] = {}
        for t in ql:
            octa = self.q_octahedron(t.spine)  # type: ignore[arg-type]
            if octa is not None:
                octahedra[octa.vertices] = octa
        return qr, ql, [octahedra[k] for k in sorted(octahedra)]

    # === SOBREPOSIÇÃO ===

    def polyhedron(self, t: ClassifiedTetra) -> ConvexPolyhedron:
        if t.key not in self._polys:
            self._polys[t.key] = tetra_polyhedron(t.tetra)
        return self._polys[t.key]

    def nearby_tetras(self, point: np.ndarray, radius: float) -> List[ClassifiedTetra]:
        """QR/QL com algum vértice a distância <= raio do ponto."""
        found: Dict[TetraKey, ClassifiedTetra] = {}
        for i in self.index.within(point, radius):
            for t in self.tetra_at(int(i)):
                found[t.key] = t
        return [found[k] for k in sorted(found)]

    def overlaps(self, t: ClassifiedTetra) -> List[ClassifiedTetra]:
        """QR/QL que se sobrepõem a t com volume positivo."""
        if t.key in self._overlaps:
            return self._overlaps[t.key]
        verts = t.tetra.vertices
        centroid = verts.mean(axis=0)
        reach = float(np.linalg.norm(verts - centroid, axis=1).max()) + Constants.SPINE_MAX + self.eps
        result = []
        for other in self.nearby_tetras(centroid, reach):
            if other.key == t.key:
                continue
            if tetra_overlap_volume(t.tetra, other.tetra) > self.overlap_tol:
                result.append(other)
        self._overlaps[t.key] = result
        return result

    # === SISTEMA D ===

    def decide_spine(self, key: SpineKey) -> Tuple[bool, AdmittingRule]:
        """
        Decide a inclusão de todos os quartos de uma espinha.

        Returns:
            Tuple[bool, AdmittingRule]: (incluída, regra aplicada)

        Raises:
            DecompositionError: Se a espinha não tem quartos ou tem menos de três
                âncoras sem ser isolada
        """
        key = (min(key), max(key))
        if key in self._decisions:
            return self._decisions[key]
        spine = self.spine(key)
        if not spine.ql_keys:
            raise DecompositionError(f"Espinha {spine_label(key)} sem tetraedros QL")
        n = len(spine.anchors)
        quarters = [self._tetras[k] for k in spine.ql_keys]

        if spine.isolated:
            decision = (not self.overlaps(quarters[0]), AdmittingRule.QL0)
        elif n >= 5:
            decision = (True, AdmittingRule.QL1)
        elif n == 4:
            octa = self.q_octahedron(key)
            decision = (octa is None or octa.chosen == key, AdmittingRule.QL2)
        elif n == 3:
            decision = (self._ql3(key, quarters), AdmittingRule.QL3)
        else:
            raise DecompositionError(
                f"Espinha {spine_label(key)} não isolada com {n} âncoras"
            )
        self._decisions[key] = decision
        return decision

    def _ql3(self, key: SpineKey, quarters: List[ClassifiedTetra]) -> bool:
        rivals: Set[SpineKey] = set()
        for q in quarters:
            for other in self.overlaps(q):
                if other.spine == key:
                    continue
                if other.kind == SimplexKind.QR:
                    return False
                other_spine = self.spine(other.spine)  # type: ignore[arg-type]
                if other_spine.isolated:
                    continue
                if len(other_spine.anchors) >= 4:
                    return False
                rivals.add(other_spine.endpoints)
        if not rivals:
            return True
        own = self.lex_key(key)
        return all(own < self.lex_key(r) for r in rivals)

    def d_tetra(self, t: ClassifiedTetra) -> Optional[DTetra]:
        """DTetra se t pertence ao sistema D, senão None."""
        if t.kind == SimplexKind.QR:
            return DTetra(tetra=t.tetra, kind=t.kind, rule=AdmittingRule.QR)
        included, rule = self.decide_spine(t.spine)  # type: ignore[arg-type]
        if not included:
            return None
        spine = self.spine(t.spine)  # type: ignore[arg-type]
        return DTetra(
            tetra=t.tetra,
            kind=t.kind,
            rule=rule,
            spine=t.spine,
            isolated=spine.isolated,
            in_q_octahedron=self.q_octahedron(spine.endpoints) is not None,
        )

    def d_tetras_at(self, v: int) -> List[DTetra]:
        """Tetraedros do sistema D incidentes a v."""
        result = []
        for t in self.tetra_at(v):
            d = self.d_tetra(t)
            if d is not None:
                result.append(d)
        return result

    def d_tetras_near(self, point: np.ndarray, radius: float) -> List[DTetra]:
        """Tetraedros do sistema D com algum vértice a distância <= raio."""
        result = []
        for t in self.nearby_tetras(point, radius):
            d = self.d_tetra(t)
            if d is not None:
                result.append(d)
        return result

    def build_d_system(self, vertices: Optional[Iterable[int]] = None, check: bool = True) -> DSystem:
        """
        Sistema D restrito aos tetraedros incidentes aos vértices dados.

        Args:
            vertices: Vértices (padrão: todos)
            check: Verifica não sobreposição e a condição de espinha comum

        Returns:
            DSystem: Tetraedros selecionados, agrupados por espinha

        Raises:
            DSystemConsistencyError: Se a verificação falha
        """
        verts = range(self.packing.size) if vertices is None else list(vertices)
        selected: Dict[TetraKey, DTetra] = {}
        spine_keys: Set[SpineKey] = set()
        for v in verts:
            for t in self.tetra_at(int(v)):
                if t.spine is not None:
                    spine_keys.add(t.spine)
                d = self.d_tetra(t)
                if d is not None:
                    selected[d.key] = d

        spines: Dict[str, List[TetraKey]] = {}
        excluded: List[SpineKey] = []
        for key in sorted(spine_keys):
            included, _ = self.decide_spine(key)
            if included:
                spines[spine_label(key)] = list(self.spine(key).ql_keys)
            else:
                excluded.append(key)

        system = DSystem(
            tetras=[selected[k] for k in sorted(selected)],
            spines=spines,
            excluded_spines=excluded,
            anomalies=list(self.anomalies),
        )
        if check:
            self.check_d_system(system)
        log_pipeline_event(
            "d_system_built",
            stage="decompose",
            tetras=len(system.tetras),
            by_rule=system.by_rule(),
            excluded_spines=len(excluded),
        )
        return system

    def check_d_system(self, system: DSystem) -> None:
        """
        Verifica não sobreposição par a par e a condição de espinha comum.

        Raises:
            DSystemConsistencyError: Na primeira violação encontrada
        """
        keys = {d.key for d in system.tetras}
        for d in system.tetras:
            t = self._tetras[d.key]
            for other in self.overlaps(t):
                if other.key in keys:
                    self.logger.error("d_system_overlap", first=list(d.key), second=list(other.key))
                    raise DSystemConsistencyError(
                        f"Tetraedros {d.key} e {other.key} do sistema D se sobrepõem"
                    )
        for label, quarters in system.spines.items():
            present = [k in keys for k in quarters]
            if any(present) and not all(present):
                raise DSystemConsistencyError(f"Espinha {label} incluída parcialmente")

    # === PONTAS ===

    def tip(self, d: DTetra) -> Optional[Tip]:
        """
        Ponta do tetraedro, se algum vértice é negativo.

        Um vértice u é negativo quando a coordenada baricêntrica do circuncentro
        em u é menor que −ε (o plano da face oposta separa u do circuncentro).
        A ponta é a região de Voronoi de u entre os quatro vértices, do lado do
        circuncentro desse plano.
        """
        if d.key in self._tips:
            return self._tips[d.key]
        t = d.tetra
        x, _ = circumcenter(t)
        lam = barycentric(t, x)[0]
        negative = [i for i in range(4) if lam[i] < -self.eps]
        tip: Optional[Tip] = None
        if negative:
            if len(negative) > 1:
                self.record_anomaly(
                    AnomalyKind.MULTIPLE_NEGATIVE_VERTICES,
                    f"Tetraedro {d.key} com {len(negative)} vértices negativos",
                    d.key,
                )
            u = min(negative, key=lambda i: lam[i])
            tip = self._build_tip(d, u)
        self._tips[d.key] = tip
        return tip

    def _build_tip(self, d: DTetra, u: int) -> Optional[Tip]:
        p = d.tetra.vertices
        others = [i for i in range(4) if i != u]
        rows = [bisector_halfspace(p[u], p[w]) for w in others]
        a, b, c = (p[i] for i in others)
        n = np.cross(b - a, c - a)
        if n @ (p[u] - a) < 0:
            n = -n
        rows.append(np.append(n, -(n @ a)))
        try:
            poly = polyhedron_from_halfspaces(np.array(rows))
        except GeometryError as e:
            self.logger.warning("tip_construction_failed", tetra=list(d.key), error=str(e))
            return None
        if poly is None:
            return None

        owner = d.tetra.indices[u]  # type: ignore[index]
        unit = n / np.linalg.norm(n)
        on_plane = poly.vertices[np.abs((poly.vertices - a) @ unit) <= 1e-9]
        if len(on_plane):
            face = make_tetra([a, b, c, p[u]])
            coords = barycentric(face, on_plane)[:, :3]
            if np.any(coords < -1e-9):
                self.record_anomaly(
                    AnomalyKind.TIP_OUTSIDE_FACE,
                    f"Ponta de {d.key} fora da face oposta a {owner}",
                    d.key,
                    float(coords.min()),
                )

        covered = 0.0
        reach = poly.diameter + Constants.SPINE_MAX + self.eps
        for other in self.d_tetras_near(poly.centroid, reach):
            if other.key == d.key:
                continue
            covered += _overlap(poly, self.polyhedron(self._tetras[other.key]))
        tol = max(self.overlap_tol, 1e-7 * poly.volume)
        if covered <= tol:
            coverage = TipCoverage.UNCOVERED
        elif covered >= poly.volume - tol:
            coverage = TipCoverage.COVERED
        else:
            coverage = TipCoverage.PARTIAL
            self.record_anomaly(
                AnomalyKind.TIP_PARTIALLY_COVERED,
                f"Ponta de {d.key} parcialmente coberta ({covered:.3e} de {poly.volume:.3e})",
                d.key,
                covered / poly.volume,
            )
        return Tip(
            tetra_key=d.key,
            negative_vertex=int(owner),
            polyhedron=poly,
            coverage=coverage,
            covered_volume=covered,
        )

    def uncovered_tips_of(self, v: int) -> List[Tip]:
        """Pontas descobertas cujo vértice negativo é v."""
        tips = []
        for d in self.d_tetras_at(v):
            tip = self.tip(d)
            if tip is not None and tip.uncovered and tip.negative_vertex == v:
                tips.append(tip)
        return tips

    def compute_tips(self, system: DSystem) -> List[Tip]:
        """Pontas de todos os tetraedros do sistema D."""
        tips = []
        for d in system.tetras:
            tip = self.tip(d)
            if tip is not None:
                tips.append(tip)
        log_pipeline_event(
            "tips_computed",
            stage="decompose",
            tips=len(tips),
            uncovered=sum(1 for t in tips if t.uncovered),
        )
        return tips

    def check_tip_overlaps(self, tips: Sequence[Tip]) -> None:
        """
        Raises:
            TipOverlapError: Se duas pontas descobertas se sobrepõem
        """
        uncovered = [t for t in tips if t.uncovered]
        for first, second in combinations(uncovered, 2):
            if _overlap(first.polyhedron, second.polyhedron) > self.overlap_tol:
                self.logger.error(
                    "tip_overlap_detected",
                    first=list(first.tetra_key),
                    second=list(second.tetra_key),
                )
                raise TipOverlapError(
                    f"Pontas de {first.tetra_key} e {second.tetra_key} se sobrepõem", first, second
                )

    # === CÉLULAS ===

    def voronoi_cell(self, v: int, exclude: Iterable[int] = ()) -> ConvexPolyhedron:
        """
        Célula de Voronoi de v (opcionalmente ignorando alguns centros).

        Os vizinhos começam no raio 4; se o vértice mais distante da célula
        passa de 2, o raio é ampliado para o dobro dessa distância.
        """
        skip = frozenset(int(e) for e in exclude)
        cache_key = (v, skip)
        if cache_key in self._cells:
            return self._cells[cache_key]
        radius = 4.0 + self.eps
        while True:
            idx = [int(i) for i in self.index.neighbors(v, radius) if int(i) not in skip]
            cell = halfspace_cell(self.centers[v], self.centers[idx], self.clip_box)
            reach = float(np.linalg.norm(cell.vertices - self.centers[v], axis=1).max())
            if 2.0 * reach <= radius or radius >= Constants.V_CELL_LOCALITY:
                break
            radius = min(2.0 * reach + self.eps, Constants.V_CELL_LOCALITY)
        self._cells[cache_key] = cell
        return cell

    def covered(self, poly: ConvexPolyhedron) -> float:
        """Volume do poliedro coberto pelas bolas do empacotamento."""
        lo, hi = poly.bounds
        center = 0.5 * (lo + hi)
        reach = float(np.linalg.norm(hi - lo)) / 2.0 + 1.0
        idx = self.index.within(center, min(reach, Constants.V_CELL_LOCALITY))
        return covered_volume(region_from([poly]), self.centers[idx])

    def v_cell(self, v: int, explicit: bool = False) -> VCell:
        """
        V-célula de v.

        Volume e volume coberto são acumulados com sinal: célula de Voronoi,
        menos suas interseções com conjuntos D, menos as pontas descobertas
        próprias, mais os fragmentos de pontas recebidos pela regra de
        rearranjo (fragmento de L_u = Vor(u) ∩ Δ(T, u) mais próximo de v
        entre os vértices diferentes de u).

        Args:
            v: Vértice interior
            explicit: Monta também as peças convexas da região

        Raises:
            TipOverlapError: Se pontas descobertas relevantes se sobrepõem
        """
        cell = self.voronoi_cell(v)
        center = self.centers[v]
        reach = float(np.linalg.norm(cell.vertices - center, axis=1).max())

        removed: List[ConvexPolyhedron] = []
        for d in self.d_tetras_near(center, reach + Constants.SPINE_MAX + self.eps):
            piece = intersect(cell, self.polyhedron(self._tetras[d.key]))
            if piece is not None and piece.volume > self.overlap_tol:
                removed.append(piece)

        own_tips = self.uncovered_tips_of(v)
        lost: List[ConvexPolyhedron] = []
        for tip in own_tips:
            piece = intersect(cell, tip.polyhedron)
            if piece is not None:
                lost.append(piece)

        gained: List[Tuple[ConvexPolyhedron, Tip]] = []
        donor_tips: List[Tip] = []
        for u in self.index.neighbors(v, 8.0):
            u = int(u)
            for tip in self.uncovered_tips_of(u):
                donor_tips.append(tip)
                donated = intersect(self.voronoi_cell(u), tip.polyhedron)
                if donated is None:
                    continue
                piece = intersect(donated, self.voronoi_cell(v, exclude=(u,)))
                if piece is not None:
                    gained.append((piece, tip))
        self.check_tip_overlaps(own_tips + donor_tips)

        volume = cell.volume - sum(p.volume for p in removed) - sum(p.volume for p in lost)
        volume += sum(p.volume for p, _ in gained)
        cov = self.covered(cell) - sum(self.covered(p) for p in removed) - sum(self.covered(p) for p in lost)
        cov += sum(self.covered(p) for p, _ in gained)

        pieces: Optional[List[VCellPiece]] = None
        if explicit:
            reduced = subtract_all([cell], removed + lost)
            pieces = [VCellPiece(polyhedron=p, provenance=PieceProvenance.REDUCED_VORONOI) for p in reduced]
            pieces += [
                VCellPiece(polyhedron=p, provenance=PieceProvenance.TIP_GAINED, source_tip=tip.tetra_key)
                for p, tip in gained
            ]

        if volume < -1e-9:
            raise DecompositionError(f"V-célula de {v} com volume negativo {volume:.3e}")
        return VCell(
            owner=v,
            volume=max(volume, 0.0),
            covered_volume=cov,
            voronoi_volume=cell.volume,
            lost_volume=sum(p.volume for p in lost),
            gained_volume=sum(p.volume for p, _ in gained),
            pieces=pieces,
            clipped=cell.clipped,
        )

    # === VERIFICAÇÕES ===

    def structural_checks(self, vertices: Iterable[int]) -> List[StructuralCheck]:
        """
        Verifica numericamente as propriedades estruturais da partição.

        São examinados os tetraedros QR/QL incidentes aos vértices dados:
        simplexos D (nenhum outro centro no fecho), QR sem sobreposição, forma
        das sobreposições QL-QR, âncoras de QL sobrepostos, octaedros Q e pontas.
        """
        qr, ql, _ = self.classify_simplices(vertices)
        checks = {
            name: StructuralCheck(name=name)
            for name in (
                "d_simplex",
                "qr_non_overlap",
                "ql_qr_shape",
                "ql_anchor_overlap",
                "ql_octahedron_shape",
                "tip_in_face",
                "tip_dichotomy",
            )
        }

        for t in qr + ql:
            checks["d_simplex"].checked += 1
            hs = tetra_halfspaces(t.tetra)
            idx = self.index.within(t.tetra.vertices.mean(axis=0), Constants.SPINE_MAX)
            others = [int(i) for i in idx if int(i) not in t.key]
            if others:
                inside = np.all(self.centers[others] @ hs[:, :3].T + hs[:, 3] <= self.eps, axis=1)
                if np.any(inside):
                    checks["d_simplex"].failures.append(f"{t.key} contém centros {np.array(others)[inside].tolist()}")
                    self.record_anomaly(AnomalyKind.NOT_D_SIMPLEX, f"{t.key} não é simplexo D", t.key)

        for t in qr:
            checks["qr_non_overlap"].checked += 1
            for other in self.overlaps(t):
                if other.kind == SimplexKind.QR and other.key > t.key:
                    checks["qr_non_overlap"].failures.append(f"{t.key} x {other.key}")
                    message = f"QR {t.key} e {other.key} se sobrepõem"
                    self.record_anomaly(AnomalyKind.QR_OVERLAP, message, t.key + other.key)

        for t in ql:
            spine = self.spine(t.spine)  # type: ignore[arg-type]
            for other in self.overlaps(t):
                if other.kind == SimplexKind.QR:
                    checks["ql_qr_shape"].checked += 1
                    if len(spine.ql_keys) != 3:
                        checks["ql_qr_shape"].failures.append(f"{t.key} x {other.key}")
                        self.record_anomaly(AnomalyKind.QL_QR_SHAPE, f"QL {t.key} sobre QR {other.key}", t.key)
                    continue
                if other.spine == t.spine or other.key < t.key:
                    continue
                other_spine = self.spine(other.spine)  # type: ignore[arg-type]
                checks["ql_anchor_overlap"].checked += 1
                if len(spine.anchors) >= 5 and len(other_spine.anchors) >= 5:
                    checks["ql_anchor_overlap"].failures.append(f"{t.key} x {other.key}")
                    message = f"QL {t.key} e {other.key} com >= 5 âncoras"
                    self.record_anomaly(AnomalyKind.QL_ANCHOR_OVERLAP, message, t.key)
                if len(spine.anchors) == 4 and len(other_spine.anchors) == 4:
                    checks["ql_octahedron_shape"].checked += 1
                    octa = self.q_octahedron(spine.endpoints)
                    if octa is None or other_spine.endpoints not in octa.diagonals:
                        checks["ql_octahedron_shape"].failures.append(f"{t.key} x {other.key}")
                        self.record_anomaly(
                            AnomalyKind.QL_OCTAHEDRON_SHAPE,
                            f"QL {t.key} e {other.key} fora de um octaedro Q",
                            t.key,
                        )

        for t in qr + ql:
            d = self.d_tetra(t)
            if d is None:
                continue
            tip = self.tip(d)
            if tip is None:
                continue
            checks["tip_in_face"].checked += 1
            checks["tip_dichotomy"].checked += 1
            if tip.coverage == TipCoverage.PARTIAL:
                checks["tip_dichotomy"].failures.append(f"{d.key}")
        for anomaly in self.anomalies:
            if anomaly.kind == AnomalyKind.TIP_OUTSIDE_FACE:
                checks["tip_in_face"].failures.append(anomaly.message)

        result = list(checks.values())
        for check in result:
            log_check_event("structural_check_done", check=check.name, passed=check.passed, checked=check.checked)
        return result

    def coverage_check(
        self, box: Box, samples: Optional[int] = None, seed: Optional[int] = None
    ) -> CoverageReport:
        """
        Localização de pontos: amostras uniformes na caixa devem cair em
        exatamente uma peça (V-célula explícita ou conjunto D).

        Raises:
            DecompositionError: Se a caixa não está a 12√2 da fronteira do domínio
        """
        if not self.packing.domain.inflated(-Constants.V_CELL_LOCALITY).contains_box(box):
            raise DecompositionError("Caixa de cobertura fora da região interior")
        n = settings.coverage_samples if samples is None else samples
        oracle = MonteCarloOracle(seed=seed)
        reach = 4.0
        center = box.center
        radius = float(np.linalg.norm(box.edges)) / 2.0 + reach
        owners = [int(i) for i in self.index.within(center, radius)]
        pieces: List[ConvexPolyhedron] = []
        for v in owners:
            cell = self.v_cell(v, explicit=True)
            pieces.extend(p.polyhedron for p in cell.pieces or [])
        seen: Set[TetraKey] = set()
        for d in self.d_tetras_near(center, radius):
            if d.key not in seen:
                seen.add(d.key)
                pieces.append(self.polyhedron(self._tetras[d.key]))
        counts = oracle.mc_point_location(pieces, box.lower, box.upper, n)
        report = CoverageReport(
            samples=n,
            uncovered=int((counts == 0).sum()),
            multiply_covered=int((counts > 1).sum()),
            volume=box.volume,
            pieces=len(pieces),
            seed=oracle.seed,
        )
        log_check_event(
            "coverage_checked", check="coverage", passed=report.passed, failure_rate=report.failure_rate
        )
        return report


def _overlap(p: ConvexPolyhedron, q: ConvexPolyhedron) -> float:
    piece = intersect(p, q)
    return 0.0 if piece is None else piece.volume


# === FUNÇÕES DE CONVENIÊNCIA ===

def classify_simplices(
    p: Packing, vertices: Optional[Iterable[int]] = None
) -> Tuple[List[ClassifiedTetra], List[ClassifiedTetra], List[QOctahedron]]:
    """QR, QL e octaedros Q incidentes aos vértices (padrão: todos)."""
    return Decomposer(p).classify_simplices(vertices)


def build_d_system(p: Packing, vertices: Optional[Iterable[int]] = None) -> DSystem:
    """
    Sistema D do empacotamento.

    Para empacotamentos saturados, o padrão são os tetraedros incidentes aos
    vértices interiores; configurações locais usam todos os vértices.
    """
    decomposer = Decomposer(p)
    if vertices is None and p.saturated:
        vertices = interior_vertices(p).tolist()
    return decomposer.build_d_system(vertices)


def compute_tips(p: Packing, system: DSystem) -> List[Tip]:
    """Pontas dos tetraedros do sistema D."""
    return Decomposer(p).compute_tips(system)


def build_v_cells(
    p: Packing, vertices: Optional[Iterable[int]] = None, explicit: bool = False
) -> Dict[int, VCell]:
    """V-células dos vértices dados (padrão: vértices interiores)."""
    decomposer = Decomposer(p)
    verts = interior_vertices(p).tolist() if vertices is None else list(vertices)
    return {int(v): decomposer.v_cell(int(v), explicit=explicit) for v in verts}


def voronoi_volume_bound_ok(cell: ConvexPolyhedron) -> bool:
    """Diâmetro <= 4√2 e no máximo 49 faces."""
    return (
        cell.diameter <= Constants.VORONOI_DIAMETER + 1e-9
        and cell.face_count <= Constants.VORONOI_MAX_FACES
    )

