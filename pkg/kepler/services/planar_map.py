"""
Mapa planar G(v) e clusters da estrela de decomposição.

Os nós são as projeções radiais, na esfera unitária centrada em v, dos
vértices a distância <= 2.51; os arcos ligam nós cujos vértices distam
<= 2.51. As faces são extraídas por caminhada de semiarestas e podem ter
vários ciclos de fronteira e nós isolados no interior.
"""

import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from kepler.core.config import settings
from kepler.core.logging import LoggerMixin, log_pipeline_event
from kepler.models.decomposition import (
    Anomaly,
    AnomalyKind,
    Cluster,
    PlanarFace,
    PlanarMap,
    VCell,
)
from kepler.models.geometry import ConvexPolyhedron
from kepler.models.scoring import Constants
from kepler.services.decomposition import Decomposer, DecompositionError
from kepler.services.geometry import clip_with_halfspaces, cone_halfspaces
from kepler.services.oracle import derive_rng

ARC_SUBDIVISION = 1e-7


class PlanarMapError(DecompositionError):
    """Erro na construção do mapa planar ou dos clusters."""
    pass


# === GEOMETRIA ESFÉRICA ===

def _unit(x: np.ndarray) -> np.ndarray:
    return x / np.linalg.norm(x, axis=-1, keepdims=True)


def _tangent_basis(u: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Base (e1, e2) do plano tangente com e1 × e2 = u."""
    helper = np.array([1.0, 0.0, 0.0]) if abs(u[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(u, helper)
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(u, e1)


def arcs_cross(p1: np.ndarray, p2: np.ndarray, q1: np.ndarray, q2: np.ndarray) -> np.ndarray:
    """
    Testa se os arcos geodésicos menores p1p2 e q1q2 se cruzam fora dos extremos.

    Vetorizado com broadcasting sobre lotes de extremos.
    """
    n1 = np.cross(p1, p2)
    n2 = np.cross(q1, q2)
    x = np.cross(n1, n2)
    hit = np.zeros(np.broadcast(x[..., 0], q1[..., 0], p1[..., 0]).shape, dtype=bool)
    for sign in (1.0, -1.0):
        xs = sign * x
        on_p = (np.einsum("...i,...i->...", np.cross(p1, xs), n1) > 0) & (
            np.einsum("...i,...i->...", np.cross(xs, p2), n1) > 0
        )
        on_q = (np.einsum("...i,...i->...", np.cross(q1, xs), n2) > 0) & (
            np.einsum("...i,...i->...", np.cross(xs, q2), n2) > 0
        )
        hit |= on_p & on_q
    return hit



def turning_angle(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> float:
    """Ângulo de giro em b ao percorrer a → b → c (esquerda positiva)."""
    t_in = -(a - (a @ b) * b)
    t_out = c - (c @ b) * b
    if np.linalg.norm(t_in) < 1e-15 or np.linalg.norm(t_out) < 1e-15:
        return 0.0
    t_in /= np.linalg.norm(t_in)
    t_out /= np.linalg.norm(t_out)
    cross = b @ np.cross(t_in, t_out)
    dot = t_in @ t_out
    if abs(cross) < 1e-14 and dot < 0:
        return -math.pi
    return math.atan2(cross, dot)


def _left_reference(dirs: np.ndarray, cycle: Sequence[int], k: int) -> np.ndarray:
    """Ponto logo à esquerda do meio da k-ésima semiaresta do ciclo."""
    a = dirs[cycle[k]]
    b = dirs[cycle[(k + 1) % len(cycle)]]
    m = _unit(a + b)
    travel = b - (b @ m) * m
    travel /= np.linalg.norm(travel)
    return _unit(m + ARC_SUBDIVISION * np.cross(m, travel))


def in_left_region(dirs: np.ndarray, cycle: Sequence[int], points: np.ndarray) -> np.ndarray:
    """
    Pertinência de pontos da esfera à região à esquerda de um ciclo.

    Conta, por paridade, cruzamentos do arco de um ponto de referência
    (à esquerda do ciclo) até cada ponto com as semiarestas do ciclo; arestas
    percorridas nos dois sentidos contam duas vezes e não separam.
    """
    pts = np.atleast_2d(points)
    result = np.zeros(len(pts), dtype=bool)
    pending = np.ones(len(pts), dtype=bool)
    for k in range(len(cycle)):
        ref = _left_reference(dirs, cycle, k)
        usable = pending & (pts @ ref > -0.9)
        if not np.any(usable):
            continue
        targets = pts[usable]
        crossings = np.zeros(len(targets), dtype=int)
        for i in range(len(cycle)):
            a = dirs[cycle[i]]
            b = dirs[cycle[(i + 1) % len(cycle)]]
            if np.allclose(a, b):
                continue
            crossings += arcs_cross(a, b, ref[None, :], targets).astype(int)
        result[np.flatnonzero(usable)] = crossings % 2 == 0
        pending[usable] = False
        if not np.any(pending):
            break
    return result


# === CONSTRUÇÃO ===

class PlanarMapBuilder(LoggerMixin):
    """Mapas planares e clusters sobre um `Decomposer` compartilhado."""

    def __init__(self, decomposer: Decomposer):
        self.decomposer = decomposer
        self.centers = decomposer.centers
        self._maps: Dict[int, PlanarMap] = {}

    def planar_map(self, v: int) -> PlanarMap:
        """
        Mapa planar G(v).

        Raises:
            PlanarMapError: Se a caminhada de semiarestas não fecha
        """
        if v in self._maps:
            return self._maps[v]
        d = self.decomposer
        nodes = sorted(d.short(v))
        dirs = _unit(self.centers[nodes] - self.centers[v]) if nodes else np.zeros((0, 3))
        position = {w: k for k, w in enumerate(nodes)}
        arcs = [
            (position[a], position[b])
            for i, a in enumerate(nodes)
            for b in nodes[i + 1:]
            if b in d.short(a)
        ]
        pm = PlanarMap(vertex=v, nodes=nodes, directions=dirs, arcs=arcs)
        self._check_crossings(pm)
        faces = self._faces(pm)
        pm = PlanarMap(
            vertex=v,
            nodes=nodes,
            directions=dirs,
            arcs=arcs,
            faces=faces,
            anomalies=pm.anomalies,
        )
        total = sum(f.area for f in faces)
        if abs(total - 4.0 * math.pi) > 1e-6:
            raise PlanarMapError(f"Faces de G({v}) somam área {total:.9f} != 4π")
        self._maps[v] = pm
        return pm

    def _check_crossings(self, pm: PlanarMap) -> None:
        dirs = pm.directions
        for i, (a, b) in enumerate(pm.arcs):
            for c, e in pm.arcs[i + 1:]:
                if len({a, b, c, e}) < 4:
                    continue
                if arcs_cross(dirs[a], dirs[b], dirs[c], dirs[e]):
                    verts = [pm.nodes[k] for k in (a, b, c, e)]
                    message = f"Arcos {verts[:2]} e {verts[2:]} de G({pm.vertex}) se cruzam"
                    self.decomposer.record_anomaly(AnomalyKind.ARC_CROSSING, message, verts)
                    pm.anomalies.append(Anomaly(kind=AnomalyKind.ARC_CROSSING, message=message, vertices=verts))

    @staticmethod
    def _rotation(pm: PlanarMap) -> Dict[int, List[int]]:
        """Vizinhos de cada nó em ordem anti-horária vista de fora."""
        adjacency: Dict[int, List[int]] = {k: [] for k in range(len(pm.nodes))}
        for a, b in pm.arcs:
            adjacency[a].append(b)
            adjacency[b].append(a)
        dirs = pm.directions
        rotation = {}
        for k, nbrs in adjacency.items():
            if not nbrs:
                rotation[k] = []
                continue
            e1, e2 = _tangent_basis(dirs[k])
            tangents = dirs[nbrs] - np.outer(dirs[nbrs] @ dirs[k], dirs[k])
            angles = np.arctan2(tangents @ e2, tangents @ e1)
            rotation[k] = [nbrs[i] for i in np.argsort(angles)]
        return rotation

    def _cycles(self, pm: PlanarMap) -> List[List[int]]:
        rotation = self._rotation(pm)
        slot = {(k, w): i for k, nbrs in rotation.items() for i, w in enumerate(nbrs)}
        visited = set()
        cycles = []
        for a, b in sorted(slot):
            if (a, b) in visited:
                continue
            cycle = []
            edge = (a, b)
            for _ in range(4 * len(slot) + 4):
                visited.add(edge)
                cycle.append(edge[0])
                tail, head = edge
                around = rotation[head]
                nxt = around[(slot[(head, tail)] - 1) % len(around)]
                edge = (head, nxt)
                if edge == (a, b):
                    break
            else:
                raise PlanarMapError(f"Caminhada de faces não fecha em G({pm.vertex})")
            cycles.append(cycle)
        return cycles

    def _faces(self, pm: PlanarMap) -> List[PlanarFace]:
        dirs = pm.directions
        cycles = self._cycles(pm)
        incident = {k for arc in pm.arcs for k in arc}
        isolated = [k for k in range(len(pm.nodes)) if k not in incident]
        if not cycles:
            return [
                PlanarFace(cycles=[], isolated_nodes=isolated, area=4.0 * math.pi, sides=0, simple=not isolated)
            ]

        component = self._components(pm)
        comp_of_cycle = [component[c[0]] for c in cycles]
        comps = sorted(set(comp_of_cycle))
        rep = {k: dirs[min(n for n, c in component.items() if c == k)] for k in comps}
        by_comp: Dict[int, List[int]] = {k: [] for k in comps}
        for i, k in enumerate(comp_of_cycle):
            by_comp[k].append(i)

        def inside(ci: int, k: int) -> bool:
            return bool(in_left_region(dirs, cycles[ci], rep[k][None, :])[0])

        parent = list(range(len(cycles)))

        def find(i: int) -> int:
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for ci, own in enumerate(comp_of_cycle):
            holes = [k for k in comps if k != own and inside(ci, k)]
            for k in holes:
                facing = [cj for cj in by_comp[k] if inside(cj, own)]
                if not facing:
                    continue
                separated = any(
                    any(inside(cm, k) and not inside(cm, own) for cm in by_comp[m])
                    for m in holes
                    if m != k
                )
                if not separated:
                    parent[find(ci)] = find(facing[0])

        groups: Dict[int, List[int]] = {}
        for ci in range(len(cycles)):
            groups.setdefault(find(ci), []).append(ci)

        faces = []
        for members in groups.values():
            members.sort(key=lambda ci: -len(cycles[ci]))
            turning = 0.0
            for ci in members:
                cycle = cycles[ci]
                n = len(cycle)
                for i in range(n):
                    turning += turning_angle(dirs[cycle[i - 1]], dirs[cycle[i]], dirs[cycle[(i + 1) % n]])
            area = 2.0 * math.pi * (2 - len(members)) - turning
            face_isolated = [
                k for k in isolated
                if all(in_left_region(dirs, cycles[ci], dirs[k][None, :])[0] for ci in members)
            ]
            outer = cycles[members[0]]
            simple = len(members) == 1 and len(set(outer)) == len(outer) and not face_isolated
            convex = simple and area < 2.0 * math.pi and all(
                turning_angle(dirs[outer[i - 1]], dirs[outer[i]], dirs[outer[(i + 1) % len(outer)]]) > 1e-12
                for i in range(len(outer))
            )
            face = PlanarFace(
                cycles=[cycles[ci] for ci in members],
                isolated_nodes=face_isolated,
                area=area,
                sides=len(outer),
                convex=convex,
                simple=simple,
            )
            if simple and area < 2.0 * math.pi:
                face.triangles = self._triangulate(dirs, outer)
            faces.append(face)
        faces.sort(key=lambda f: (f.sides, sorted(pm.nodes[k] for k in f.cycles[0]) if f.cycles else []))
        return faces

    @staticmethod
    def _components(pm: PlanarMap) -> Dict[int, int]:
        component: Dict[int, int] = {}
        adjacency: Dict[int, List[int]] = {}
        for a, b in pm.arcs:
            adjacency.setdefault(a, []).append(b)
            adjacency.setdefault(b, []).append(a)
        for start in sorted(adjacency):
            if start in component:
                continue
            stack = [start]
            component[start] = start
            while stack:
                k = stack.pop()
                for w in adjacency[k]:
                    if w not in component:
                        component[w] = start
                        stack.append(w)
        return component

    @staticmethod
    def _triangulate(dirs: np.ndarray, cycle: List[int]) -> Optional[List[Tuple[int, int, int]]]:
        """
        Triangulação por remoção de orelhas na projeção gnomônica.

        Returns:
            Optional[List]: None se o polígono não cabe num hemisfério aberto
        """
        pts = dirs[cycle]
        center = _unit(pts.sum(axis=0))
        heights = pts @ center
        if np.any(heights <= 1e-3):
            return None
        e1, e2 = _tangent_basis(center)
        proj = pts / heights[:, None]
        xy = np.stack([proj @ e1, proj @ e2], axis=1)

        def cross2(o: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
            return float((a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]))

        remaining = list(range(len(cycle)))
        triangles: List[Tuple[int, int, int]] = []
        guard = 0
        while len(remaining) > 3 and guard < 10 * len(cycle) ** 2:
            guard += 1
            n = len(remaining)
            clipped = False
            for i in range(n):
                a, b, c = remaining[i - 1], remaining[i], remaining[(i + 1) % n]
                if cross2(xy[a], xy[b], xy[c]) <= 1e-12:
                    continue
                others = [k for k in remaining if k not in (a, b, c)]
                if any(
                    cross2(xy[a], xy[b], xy[k]) >= 0
                    and cross2(xy[b], xy[c], xy[k]) >= 0
                    and cross2(xy[c], xy[a], xy[k]) >= 0
                    for k in others
                ):
                    continue
                triangles.append((cycle[a], cycle[b], cycle[c]))
                remaining.pop(i)
                clipped = True
                break
            if not clipped:
                return None
        if len(remaining) == 3:
            a, b, c = remaining
            if cross2(xy[a], xy[b], xy[c]) <= 1e-12:
                return None
            triangles.append((cycle[a], cycle[b], cycle[c]))
        for a, b, c in triangles:
            if np.linalg.det(np.array([dirs[a], dirs[b], dirs[c]])) <= 0:
                return None
        return triangles

    # === CLUSTERS ===

    def face_of(self, pm: PlanarMap, directions: np.ndarray) -> np.ndarray:
        """Índice da face que contém cada direção (−1 se nenhuma)."""
        dirs = pm.directions
        x = np.atleast_2d(directions)
        result = np.full(len(x), -1, dtype=int)
        for index, face in enumerate(pm.faces):
            mask = result < 0
            if not np.any(mask):
                break
            hit = np.ones(int(mask.sum()), dtype=bool)
            for cycle in face.cycles:
                hit &= in_left_region(dirs, cycle, x[mask])
            result[np.flatnonzero(mask)[hit]] = index
        return result

    def face_cones(self, pm: PlanarMap, face_index: int) -> Optional[List[np.ndarray]]:
        """Semiespaços dos cones sobre os triângulos da face (None se não triangulada)."""
        face = pm.faces[face_index]
        if face.triangles is None:
            return None
        apex = self.centers[pm.vertex]
        return [cone_halfspaces(apex, [pm.directions[k] for k in tri]) for tri in face.triangles]

    def clusters(self, v: int, cell: Optional[VCell] = None, seed: Optional[int] = None) -> List[Cluster]:
        """
        Clusters da estrela de v: tetraedros D incidentes e a parte da V-célula
        dentro do cone sobre cada face.

        Faces trianguláveis recebem a V-célula recortada pelos cones dos seus
        triângulos; se há uma única face não triangulável ela recebe o resto;
        com várias, a divisão é estimada por Monte Carlo e marcada inexata.
        """
        d = self.decomposer
        pm = self.planar_map(v)
        cell = cell if cell is not None and cell.pieces is not None else d.v_cell(v, explicit=True)
        center = self.centers[v]

        members: Dict[int, List[Tuple[int, ...]]] = {i: [] for i in range(len(pm.faces))}
        spine_faces: Dict[Tuple[int, int], set] = {}
        d_tetras = d.d_tetras_at(v)
        if d_tetras:
            directions = _unit(np.array([t.tetra.vertices.mean(axis=0) - center for t in d_tetras]))
            located = self.face_of(pm, directions)
            for t, face_index in zip(d_tetras, located):
                if face_index < 0:
                    raise PlanarMapError(f"Tetraedro {t.key} fora de todas as faces de G({v})")
                members[int(face_index)].append(t.key)
                if t.spine is not None:
                    spine_faces.setdefault(t.spine, set()).add(int(face_index))
        for spine, faces in spine_faces.items():
            if len(faces) > 1:
                d.record_anomaly(
                    AnomalyKind.SPINE_SPLIT_ACROSS_CLUSTERS,
                    f"Espinha {spine} dividida entre faces {sorted(faces)} de G({v})",
                    spine,
                )

        pieces = [p.polyhedron for p in cell.pieces or []]
        volume = {i: 0.0 for i in range(len(pm.faces))}
        covered = {i: 0.0 for i in range(len(pm.faces))}
        exact = {i: True for i in range(len(pm.faces))}
        pending = []
        for index in range(len(pm.faces)):
            cones = self.face_cones(pm, index)
            if cones is None:
                pending.append(index)
                continue
            for hs in cones:
                for piece in pieces:
                    part = clip_with_halfspaces(piece, hs)
                    if part is not None:
                        volume[index] += part.volume
                        covered[index] += d.covered(part)

        if len(pending) == 1:
            index = pending[0]
            volume[index] = cell.volume - sum(volume[i] for i in volume if i != index)
            covered[index] = cell.covered_volume - sum(covered[i] for i in covered if i != index)
        elif pending and pieces:
            self._mc_split(pm, pieces, pending, volume, covered, seed)
            for index in pending:
                exact[index] = False

        clusters = [
            Cluster(
                face_index=i,
                sides=pm.faces[i].sides,
                d_tetras=sorted(members[i]),
                v_cell_volume=volume[i],
                v_cell_compression=covered[i] - Constants.DELTA_OCT * volume[i],
                exact=exact[i],
            )
            for i in range(len(pm.faces))
        ]
        log_pipeline_event(
            "clusters_built", stage="decompose", vertex=v, faces=len(clusters), d_tetras=len(d_tetras)
        )
        return clusters

    def _mc_split(
        self,
        pm: PlanarMap,
        pieces: List[ConvexPolyhedron],
        pending: List[int],
        volume: Dict[int, float],
        covered: Dict[int, float],
        seed: Optional[int],
    ) -> None:
        """Reparte a V-célula entre faces não trianguladas por direção das amostras."""
        seed = settings.seed if seed is None else seed
        n = max(20000, settings.mc_samples // 20)
        tree = cKDTree(self.centers[self.decomposer.index.within(self.centers[pm.vertex], 8.0)])
        apex = self.centers[pm.vertex]
        for k, piece in enumerate(pieces):
            lo, hi = piece.bounds
            box_volume = float(np.prod(hi - lo))
            rng = derive_rng(seed, pm.vertex, k)
            pts = lo + (hi - lo) * rng.random((n, 3))
            pts = pts[piece.contains(pts)]
            if not len(pts):
                continue
            offsets = pts - apex
            norms = np.linalg.norm(offsets, axis=1)
            pts, offsets, norms = pts[norms > 1e-12], offsets[norms > 1e-12], norms[norms > 1e-12]
            faces = self.face_of(pm, offsets / norms[:, None])
            dist, _ = tree.query(pts)
            for index in pending:
                mask = faces == index
                volume[index] += box_volume * mask.sum() / n
                covered[index] += box_volume * (mask & (dist <= 1.0)).sum() / n


def planar_map(decomposer: Decomposer, v: int) -> PlanarMap:
    return PlanarMapBuilder(decomposer).planar_map(v)


def clusters(decomposer: Decomposer, v: int) -> List[Cluster]:
    return PlanarMapBuilder(decomposer).clusters(v)
