"""
Primitivas geométricas 3D.

Este módulo implementa a mensuração de simplexos (volume de Cayley-Menger,
Δ, A e ângulo sólido), circuncentros, simplexos de Rogers, poliedros convexos
por interseção de semiespaços e o volume exato de bola ∩ poliedro, que sustenta
o volume coberto de qualquer região.
"""

import math
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import ValidationError
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, HalfspaceIntersection, QhullError

from kepler.core.config import settings
from kepler.core.logging import get_logger
from kepler.models.geometry import EDGE_PAIRS, ConvexPolyhedron, Region, RogersShape, Tetra
from kepler.models.packing import Box

logger = get_logger(__name__)


class GeometryError(Exception):
    """Erro específico de operações geométricas."""
    pass


class DegenerateGeometryError(GeometryError):
    """Configuração degenerada (volume ou área nulos)."""
    pass


class UnboundedCellError(GeometryError):
    """Célula ilimitada mesmo após o recorte."""
    pass


# === TETRAEDROS ===

def make_tetra(points: Sequence[Sequence[float]], indices: Optional[Sequence[int]] = None) -> Tetra:
    """
    Constrói um tetraedro a partir de quatro pontos.

    Args:
        points: Quatro pontos 3D
        indices: Índices opcionais no empacotamento

    Returns:
        Tetra: Tetraedro validado

    Raises:
        GeometryError: Se os pontos não formam uma matriz 4 x 3 finita
    """
    try:
        return Tetra(
            vertices=np.asarray(points, dtype=float),
            indices=tuple(int(i) for i in indices) if indices is not None else None,
        )
    except ValidationError as e:
        raise GeometryError(f"Tetraedro inválido: {str(e)}")


def tetra_from_lengths(lengths: Sequence[float]) -> Tetra:
    """
    Tetraedro realizando seis comprimentos na ordem canônica (01, 02, 03, 23, 13, 12).

    Raises:
        DegenerateGeometryError: Se os comprimentos não realizam um tetraedro
            de volume positivo
    """
    l01, l02, l03, l23, l13, l12 = (float(x) for x in lengths)
    x2 = (l01**2 + l02**2 - l12**2) / (2.0 * l01)
    y2sq = l02**2 - x2**2
    if y2sq <= 0.0:
        raise DegenerateGeometryError("Face 012 degenerada")
    y2 = math.sqrt(y2sq)
    x3 = (l01**2 + l03**2 - l13**2) / (2.0 * l01)
    y3 = (l02**2 + l03**2 - l23**2 - 2.0 * x2 * x3) / (2.0 * y2)
    z3sq = l03**2 - x3**2 - y3**2
    if z3sq <= 0.0:
        raise DegenerateGeometryError("Comprimentos não realizáveis em R³")
    return make_tetra(
        [[0.0, 0.0, 0.0], [l01, 0.0, 0.0], [x2, y2, 0.0], [x3, y3, math.sqrt(z3sq)]]
    )


def signed_volume(a: np.ndarray, b: np.ndarray, c: np.ndarray, d: np.ndarray) -> float:
    """Volume orientado det[b−a, c−a, d−a] / 6."""
    return float(np.linalg.det(np.array([b - a, c - a, d - a]))) / 6.0


def _pair_matrix(squared: np.ndarray) -> np.ndarray:
    d = np.zeros((4, 4))
    for value, (i, j) in zip(squared, EDGE_PAIRS):
        d[i, j] = d[j, i] = value
    return d


def cm_volume(t: Tetra) -> float:
    """
    Volume euclidiano pelo determinante de Cayley-Menger (288 V² = det).

    Args:
        t: Tetraedro

    Returns:
        float: Volume positivo

    Raises:
        DegenerateGeometryError: Se o volume é nulo dentro da tolerância
    """
    x = t.squared_lengths
    m = np.ones((5, 5))
    m[0, 0] = 0.0
    m[1:, 1:] = _pair_matrix(x)
    vol2 = float(np.linalg.det(m)) / 288.0
    scale = float(np.sqrt(x.max())) if x.max() > 0 else 0.0
    if vol2 <= 0.0 or math.sqrt(vol2) <= 1e-12 * scale**3:
        raise DegenerateGeometryError(f"Tetraedro degenerado (288V² = {288.0 * vol2:.3e})")
    return math.sqrt(vol2)


def delta(x1: float, x2: float, x3: float, x4: float, x5: float, x6: float) -> float:
    """
    Polinômio Δ nos comprimentos ao quadrado, com Δ = 144·vol².

    Usa a forma simétrica corrigida: x1x4(−x1+x2+x3−x4+x5+x6) em rotação
    cíclica, menos os quatro produtos de faces.
    """
    return (
        x1 * x4 * (-x1 + x2 + x3 - x4 + x5 + x6)
        + x2 * x5 * (x1 - x2 + x3 + x4 - x5 + x6)
        + x3 * x6 * (x1 + x2 - x3 + x4 + x5 - x6)
        - x2 * x3 * x4
        - x1 * x3 * x5
        - x1 * x2 * x6
        - x4 * x5 * x6
    )


def a_coeff(l1: float, l2: float, l3: float, l4: float, l5: float, l6: float) -> float:
    """Coeficiente A da fórmula do ângulo sólido (terceiro termo com l6)."""
    return (
        l1 * l2 * l3
        + 0.5 * l1 * (l2**2 + l3**2 - l4**2)
        + 0.5 * l2 * (l1**2 + l3**2 - l5**2)
        + 0.5 * l3 * (l1**2 + l2**2 - l6**2)
    )


def solid_angle_from_lengths(lengths: np.ndarray) -> np.ndarray:
    """
    Ângulo sólido no vértice 0, vetorizado sobre lotes de seis comprimentos.

    Sol = 2·arccot(2A/√Δ) com arccot em [0, π], calculado como
    2·atan2(√Δ, 2A). Valores de Δ negativos por arredondamento viram 0.
    """
    l = np.atleast_2d(np.asarray(lengths, dtype=float))
    x = l**2
    d = delta(*(x[:, i] for i in range(6)))
    a = a_coeff(*(l[:, i] for i in range(6)))
    return 2.0 * np.arctan2(np.sqrt(np.maximum(d, 0.0)), 2.0 * a)


def solid_angle(t: Tetra, v: int) -> float:
    """
    Ângulo sólido de T no vértice de índice local `v`.

    Args:
        t: Tetraedro não degenerado
        v: Índice local do vértice (0..3)

    Returns:
        float: Ângulo sólido em esferorradianos, em (0, 2π)

    Raises:
        DegenerateGeometryError: Se T é degenerado
    """
    cm_volume(t)
    apexed = t.reordered(v)
    return float(solid_angle_from_lengths(apexed.edge_lengths)[0])


def circumcenter(t: Tetra) -> Tuple[np.ndarray, float]:
    """
    Centro e raio da esfera circunscrita.

    Raises:
        DegenerateGeometryError: Se T é degenerado
    """
    cm_volume(t)
    v = t.vertices
    m = 2.0 * (v[1:] - v[0])
    rhs = (v[1:] ** 2).sum(axis=1) - (v[0] ** 2).sum()
    try:
        center = np.linalg.solve(m, rhs)
    except np.linalg.LinAlgError as e:
        raise DegenerateGeometryError(f"Circuncentro indefinido: {str(e)}")
    return center, float(np.linalg.norm(center - v[0]))


def barycentric(t: Tetra, points: np.ndarray) -> np.ndarray:
    """Coordenadas baricêntricas de um lote de pontos em relação a T."""
    v = t.vertices
    m = np.vstack([v.T, np.ones(4)])
    pts = np.atleast_2d(points)
    rhs = np.vstack([pts.T, np.ones(len(pts))])
    return np.linalg.solve(m, rhs).T


def face_circumradius(p: np.ndarray, q: np.ndarray, r: np.ndarray) -> float:
    """
    Raio do círculo pelos três pontos, abc / (4K).

    Raises:
        DegenerateGeometryError: Se os pontos são colineares
    """
    p, q, r = (np.asarray(x, dtype=float) for x in (p, q, r))
    a = np.linalg.norm(q - r)
    b = np.linalg.norm(p - r)
    c = np.linalg.norm(p - q)
    area = 0.5 * np.linalg.norm(np.cross(q - p, r - p))
    scale = max(a, b, c)
    if area <= 1e-12 * scale**2:
        raise DegenerateGeometryError("Pontos colineares não definem um círculo")
    return float(a * b * c / (4.0 * area))


def face_circumcenter(p: np.ndarray, q: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Circuncentro do triângulo pqr (no plano do triângulo)."""
    a = q - p
    b = r - p
    axb = np.cross(a, b)
    denom = 2.0 * float(axb @ axb)
    if denom <= 1e-24:
        raise DegenerateGeometryError("Pontos colineares não definem um círculo")
    return p + (np.cross(axb, a) * (b @ b) + np.cross(b, axb) * (a @ a)) / denom


# === SIMPLEXOS DE ROGERS ===

def rogers_shape(a: float, b: float, c: float) -> RogersShape:
    """
    Valida uma forma de Rogers.

    Raises:
        GeometryError: Se 1 <= a <= b <= c não vale
    """
    try:
        return RogersShape(a=a, b=b, c=c)
    except ValidationError as e:
        raise GeometryError(f"Forma de Rogers inválida: {str(e)}")


def rogers_volume(s: RogersShape) -> float:
    """Volume a·√(b²−a²)·√(c²−b²) / 6."""
    return (
        s.a
        * math.sqrt(max(s.b**2 - s.a**2, 0.0))
        * math.sqrt(max(s.c**2 - s.b**2, 0.0))
        / 6.0
    )


def rogers_simplex(s: RogersShape) -> Tetra:
    """Simplexo com vértices na origem e a distâncias a, b, c sobre uma bandeira reta."""
    p = math.sqrt(max(s.b**2 - s.a**2, 0.0))
    q = math.sqrt(max(s.c**2 - s.b**2, 0.0))
    return make_tetra([[0.0, 0.0, 0.0], [s.a, 0.0, 0.0], [s.a, p, 0.0], [s.a, p, q]])


def rogers_pieces(t: Tetra, v: int) -> List[Tuple[float, np.ndarray]]:
    """
    Decomposição com sinal da região de Voronoi local de um vértice.

    Para cada bandeira (vértice, aresta v–vj, face v–vj–vk) retorna o sinal e
    os vértices (v, ponto médio, circuncentro da face, circuncentro de T). O
    sinal é negativo quando o circuncentro da face cai do lado oposto a vk na
    face, ou quando o circuncentro de T cai do lado oposto a vl do plano da face.

    Returns:
        List[Tuple[float, np.ndarray]]: Seis pares (sinal, vértices 4 x 3)
    """
    x, _ = circumcenter(t)
    p = t.vertices
    v0 = p[v]
    others = [i for i in range(4) if i != v]
    pieces = []
    for j in others:
        for k in others:
            if k == j:
                continue
            l = next(i for i in others if i not in (j, k))
            m = 0.5 * (v0 + p[j])
            f = face_circumcenter(v0, p[j], p[k])
            reference = np.linalg.det(np.array([p[j] - v0, p[k] - v0, p[l] - v0]))
            orient = np.linalg.det(np.array([m - v0, f - v0, x - v0]))
            scale = float(np.linalg.norm(p[j] - v0)) ** 3
            sign = 0.0 if abs(orient) <= 1e-14 * scale else float(np.sign(orient) * np.sign(reference))
            pieces.append((sign, np.array([v0, m, f, x])))
    return pieces


def rogers_lengths(piece: np.ndarray) -> np.ndarray:
    """Seis comprimentos de um simplexo de Rogers na ordem canônica."""
    return np.array([np.linalg.norm(piece[i] - piece[j]) for i, j in EDGE_PAIRS])


# === POLIEDROS CONVEXOS ===

def box_halfspaces(box: Box) -> np.ndarray:
    """Seis semiespaços de uma caixa, convenção a·x + b <= 0."""
    rows = []
    for axis in range(3):
        normal = np.zeros(3)
        normal[axis] = 1.0
        rows.append(np.append(normal, -box.upper[axis]))
        rows.append(np.append(-normal, box.lower[axis]))
    return np.array(rows)


def chebyshev_center(halfspaces: np.ndarray) -> Optional[Tuple[np.ndarray, float]]:
    """
    Centro e raio da maior bola inscrita (programa linear).

    Returns:
        Optional[Tuple[np.ndarray, float]]: None se vazio ou ilimitado
    """
    a = halfspaces[:, :3]
    b = -halfspaces[:, 3]
    norms = np.linalg.norm(a, axis=1)
    cost = np.array([0.0, 0.0, 0.0, -1.0])
    bounds = [(None, None)] * 3 + [(0.0, None)]
    result = linprog(
        cost, A_ub=np.hstack([a, norms[:, None]]), b_ub=b, bounds=bounds, method="highs"
    )
    if not result.success:
        return None
    return result.x[:3], float(result.x[3])


def polyhedron_from_halfspaces(
    halfspaces: np.ndarray,
    clip_box: Optional[Box] = None,
    min_radius: Optional[float] = None,
) -> Optional[ConvexPolyhedron]:
    """
    Poliedro convexo dado por semiespaços a·x + b <= 0.

    Args:
        halfspaces: Matriz m x 4
        clip_box: Caixa de recorte opcional (exigida para regiões ilimitadas)
        min_radius: Raio de Chebyshev mínimo para considerar não vazio

    Returns:
        Optional[ConvexPolyhedron]: None quando vazio ou achatado

    Raises:
        UnboundedCellError: Se a região é ilimitada e não há caixa de recorte
        GeometryError: Se o qhull falha em uma região de interior não trivial
    """
    tol = settings.geometry_tolerance if min_radius is None else min_radius
    hs = np.asarray(halfspaces, dtype=float)
    norms = np.linalg.norm(hs[:, :3], axis=1)
    hs = hs[norms > 0] / norms[norms > 0, None]
    full = hs if clip_box is None else np.vstack([hs, box_halfspaces(clip_box)])

    cheb = chebyshev_center(full)
    if cheb is None:
        if clip_box is None:
            probe = np.vstack([hs, box_halfspaces(Box.cube([0, 0, 0], 1e6))])
            if chebyshev_center(probe) is not None:
                raise UnboundedCellError("Região ilimitada sem caixa de recorte")
        return None
    center, radius = cheb
    if radius <= tol:
        return None

    try:
        intersection = HalfspaceIntersection(full, center)
        hull = ConvexHull(intersection.intersections)
    except QhullError as e:
        if radius < 1e-6:
            logger.warning("qhull_degenerate_piece", radius=radius, error=str(e))
            return None
        raise GeometryError(f"Falha do qhull: {str(e)}")

    vertices = hull.points[hull.vertices]
    triangles = _remap(hull)
    clipped = False
    if clip_box is not None:
        on_box = np.minimum(
            np.abs(vertices - clip_box.lower), np.abs(vertices - clip_box.upper)
        ).min(axis=1)
        clipped = bool(np.any(on_box <= 1e-9))
    return ConvexPolyhedron(
        halfspaces=full if clipped else hs,
        vertices=vertices,
        triangles=triangles,
        equations=hull.equations,
        volume=float(hull.volume),
        clipped=clipped,
    )


def tetra_halfspaces(t: Tetra) -> np.ndarray:
    """Quatro semiespaços (normais unitárias externas) de um tetraedro."""
    v = t.vertices
    rows = []
    for i in range(4):
        a, b, c = (v[j] for j in range(4) if j != i)
        n = np.cross(b - a, c - a)
        if n @ (v[i] - a) > 0:
            n = -n
        n = n / np.linalg.norm(n)
        rows.append(np.append(n, -n @ a))
    return np.array(rows)


def tetra_polyhedron(t: Tetra) -> ConvexPolyhedron:
    """
    Tetraedro como poliedro convexo.

    Raises:
        DegenerateGeometryError: Se T é degenerado
    """
    volume = cm_volume(t)
    hull = ConvexHull(t.vertices)
    return ConvexPolyhedron(
        halfspaces=tetra_halfspaces(t),
        vertices=t.vertices,
        triangles=hull.simplices,
        equations=hull.equations,
        volume=volume,
    )


def hull_polyhedron(points: np.ndarray) -> ConvexPolyhedron:
    """
    Fecho convexo de um conjunto de pontos.

    Raises:
        DegenerateGeometryError: Se os pontos são coplanares
    """
    try:
        hull = ConvexHull(np.asarray(points, dtype=float))
    except QhullError as e:
        raise DegenerateGeometryError(f"Fecho convexo degenerado: {str(e)}")
    return ConvexPolyhedron(
        halfspaces=hull.equations,
        vertices=hull.points[hull.vertices],
        triangles=_remap(hull),
        equations=hull.equations,
        volume=float(hull.volume),
    )


def _remap(hull: ConvexHull) -> np.ndarray:
    index = {int(old): new for new, old in enumerate(hull.vertices)}
    return np.vectorize(index.get)(hull.simplices)


def halfspace_cell(
    center: np.ndarray, neighbors: np.ndarray, clip_box: Box
) -> ConvexPolyhedron:
    """
    Célula de Voronoi de `center` em relação a `neighbors`, recortada.

    Args:
        center: Centro da célula
        neighbors: Pontos distintos do centro (k x 3); pode ser vazio
        clip_box: Caixa de recorte (domínio inflado)

    Returns:
        ConvexPolyhedron: Célula; `clipped` indica contato com a caixa

    Raises:
        DegenerateGeometryError: Se a célula é vazia
    """
    c = np.asarray(center, dtype=float)
    w = np.asarray(neighbors, dtype=float).reshape(-1, 3)
    if len(w):
        normals = w - c
        offsets = -((w**2).sum(axis=1) - c @ c) / 2.0
        hs = np.hstack([normals, offsets[:, None]])
    else:
        hs = np.zeros((0, 4))
    cell = polyhedron_from_halfspaces(hs, clip_box=clip_box)
    if cell is None:
        raise DegenerateGeometryError("Célula de Voronoi vazia")
    if cell.clipped:
        logger.debug("voronoi_cell_clipped", center=c.tolist(), neighbors=len(w))
    return cell


def bisector_halfspace(v: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Semiespaço dos pontos mais próximos de v que de w."""
    normal = w - v
    return np.append(normal, -((w @ w) - (v @ v)) / 2.0)


def cone_halfspaces(apex: np.ndarray, directions: Sequence[np.ndarray]) -> np.ndarray:
    """
    Semiespaços do cone convexo com vértice `apex` sobre um polígono esférico.

    As direções devem estar em ordem anti-horária vista de fora da esfera
    (det(a, b, c) > 0 em cada canto).
    """
    rows = []
    k = len(directions)
    for i in range(k):
        n = np.cross(directions[i], directions[(i + 1) % k])
        n = n / np.linalg.norm(n)
        rows.append(np.append(-n, n @ apex))
    return np.array(rows)


def intersect(p: ConvexPolyhedron, q: ConvexPolyhedron) -> Optional[ConvexPolyhedron]:
    """Interseção de dois poliedros convexos (None se de medida nula)."""
    if not _bounds_overlap(p, q):
        return None
    return polyhedron_from_halfspaces(np.vstack([_facets(p), _facets(q)]))


def clip_with_halfspaces(p: ConvexPolyhedron, halfspaces: np.ndarray) -> Optional[ConvexPolyhedron]:
    """Interseção de um poliedro com semiespaços adicionais."""
    return polyhedron_from_halfspaces(np.vstack([_facets(p), halfspaces]))


def intersection_volume(p: ConvexPolyhedron, q: ConvexPolyhedron) -> float:
    """Volume de P ∩ Q."""
    piece = intersect(p, q)
    return 0.0 if piece is None else piece.volume


def _facets(p: ConvexPolyhedron) -> np.ndarray:
    planes = np.round(p.equations, 12)
    _, first = np.unique(planes, axis=0, return_index=True)
    return p.equations[np.sort(first)]


def _bounds_overlap(p: ConvexPolyhedron, q: ConvexPolyhedron, tol: float = 1e-12) -> bool:
    plo, phi = p.bounds
    qlo, qhi = q.bounds
    return bool(np.all(plo <= qhi + tol) and np.all(qlo <= phi + tol))


def subtract(p: ConvexPolyhedron, q: ConvexPolyhedron) -> List[ConvexPolyhedron]:
    """
    Diferença P − Q como peças convexas disjuntas.

    P − Q = ∪_i P ∩ {h_1 .. h_{i−1}} ∩ {¬h_i}, sobre as facetas h_i de Q;
    peças com raio de Chebyshev abaixo da tolerância são descartadas.
    """
    if intersect(p, q) is None:
        return [p]
    pieces: List[ConvexPolyhedron] = []
    kept = _facets(p)
    for plane in _facets(q):
        flipped = -plane
        piece = polyhedron_from_halfspaces(np.vstack([kept, flipped]))
        if piece is not None:
            pieces.append(piece)
        kept = np.vstack([kept, plane])
    return pieces


def subtract_all(
    pieces: Iterable[ConvexPolyhedron], removals: Iterable[ConvexPolyhedron]
) -> List[ConvexPolyhedron]:
    """Subtrai sucessivamente cada poliedro de `removals` de todas as peças."""
    current = list(pieces)
    for q in removals:
        nxt: List[ConvexPolyhedron] = []
        for p in current:
            nxt.extend(subtract(p, q))
        current = nxt
    return current


def separated(
    points_a: np.ndarray, points_b: np.ndarray, axes: np.ndarray, tol: float
) -> bool:
    """Teste de eixo separador sobre um conjunto de eixos candidatos."""
    norms = np.linalg.norm(axes, axis=1)
    axes = axes[norms > 1e-12] / norms[norms > 1e-12, None]
    pa = points_a @ axes.T
    pb = points_b @ axes.T
    gap = np.maximum(pb.min(axis=0) - pa.max(axis=0), pa.min(axis=0) - pb.max(axis=0))
    return bool(np.any(gap >= -tol))


def tetra_overlap_volume(s: Tetra, t: Tetra) -> float:
    """
    Volume de interseção de dois tetraedros, com pré-filtro de eixo separador.

    Tetraedros que apenas se tocam (faces, arestas ou vértices comuns)
    devolvem 0.
    """
    tol = settings.geometry_tolerance
    ps, pt = s.vertices, t.vertices
    edges_s = np.array([ps[j] - ps[i] for i, j in EDGE_PAIRS])
    edges_t = np.array([pt[j] - pt[i] for i, j in EDGE_PAIRS])
    normals = np.vstack([tetra_halfspaces(s)[:, :3], tetra_halfspaces(t)[:, :3]])
    crosses = np.cross(edges_s[:, None, :], edges_t[None, :, :]).reshape(-1, 3)
    if separated(ps, pt, np.vstack([normals, crosses]), tol):
        return 0.0
    piece = polyhedron_from_halfspaces(
        np.vstack([tetra_halfspaces(s), tetra_halfspaces(t)])
    )
    return 0.0 if piece is None else piece.volume


# === VOLUME DE BOLA ∩ POLIEDRO ===

def _edge_integral(d: np.ndarray, theta: np.ndarray, h: np.ndarray, t: float) -> np.ndarray:
    """
    Primitiva angular Ψ(θ) de ∫ min(1, t³/s³) dA sobre um setor triangular.

    O setor tem vértice no pé da perpendicular, aresta oposta à distância d
    e s² = h² + r². Ψ é ímpar e contínua em θ.
    """
    rho2 = np.maximum(t * t - h * h, 0.0)
    rho = np.sqrt(rho2)
    s0 = np.maximum(t, h)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(rho > 0, np.clip(d / np.where(rho > 0, rho, 1.0), 0.0, 1.0), 1.0)
    theta_star = np.where(d < rho, np.arccos(ratio), 0.0)
    hd = np.sqrt(h * h + d * d)

    def phi_in(th: np.ndarray) -> np.ndarray:
        return 0.5 * d * d * np.tan(th)

    def phi_out(th: np.ndarray) -> np.ndarray:
        return (0.5 * rho2 + t**3 / s0) * th - (t**3 / h) * np.arcsin(
            np.clip(h * np.sin(th) / hd, -1.0, 1.0)
        )

    a = np.abs(theta)
    sign = np.sign(theta)
    inner = phi_in(np.minimum(a, theta_star))
    outer = np.where(a > theta_star, phi_out(a) - phi_out(theta_star), 0.0)
    return sign * (inner + outer)


def ball_polytope_volume(poly: ConvexPolyhedron, center: np.ndarray, radius: float) -> float:
    """
    Volume exato de P ∩ B(c, t) para qualquer centro c.

    Pelo teorema da divergência com F(x) = (x − c)·min(1, t³/s³)/3, o volume é
    Σ_faces (h_f/3)·∫_f min(1, t³/s³) dA, com h_f a distância assinada de c ao
    plano da face. Cada face triangular é decomposta em leque a partir do pé
    da perpendicular, e cada setor é integrado em forma fechada.
    """
    if radius <= 0.0:
        return 0.0
    c = np.asarray(center, dtype=float)
    t = float(radius)
    lo, hi = poly.bounds
    if np.any(c < lo - t) or np.any(c > hi + t):
        return 0.0
    tri = poly.vertices[poly.triangles]
    normals = poly.equations[:, :3]
    h = -(normals @ c + poly.equations[:, 3])
    if np.all(h >= t):
        return 4.0 * math.pi * t**3 / 3.0
    keep = np.abs(h) > 1e-14
    if not np.any(keep):
        return 0.0
    tri, normals, h = tri[keep], normals[keep], h[keep]
    foot = c[None, :] + h[:, None] * normals

    # orienta cada triângulo no sentido anti-horário em torno da normal externa
    orient = np.einsum("ij,ij->i", np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]), normals)
    flip = orient < 0
    tri[flip] = tri[flip][:, [0, 2, 1]]

    habs = np.abs(h)
    total = np.zeros(len(tri))
    for k in range(3):
        a = tri[:, k]
        b = tri[:, (k + 1) % 3]
        cross = np.einsum("ij,ij->i", np.cross(a - foot, b - foot), normals)
        edge = b - a
        length = np.linalg.norm(edge, axis=1)
        u = edge / np.where(length > 0, length, 1.0)[:, None]
        q = a + np.einsum("ij,ij->i", foot - a, u)[:, None] * u
        d = np.linalg.norm(q - foot, axis=1)
        valid = (d > 1e-14) & (length > 0) & (np.abs(cross) > 1e-18)
        safe_d = np.where(valid, d, 1.0)
        theta_a = np.arctan2(np.einsum("ij,ij->i", a - q, u), safe_d)
        theta_b = np.arctan2(np.einsum("ij,ij->i", b - q, u), safe_d)
        integral = _edge_integral(safe_d, theta_b, habs, t) - _edge_integral(safe_d, theta_a, habs, t)
        total += np.where(valid, np.sign(cross) * integral, 0.0)
    return float(np.sum(h * total) / 3.0)


def covered_volume(region: Region, centers: np.ndarray) -> float:
    """
    Volume da região dentro da união das bolas unitárias nos centros.

    As bolas de um empacotamento têm interiores disjuntos, de modo que o volume
    coberto é a soma dos volumes bola ∩ peça.
    """
    c = np.asarray(centers, dtype=float).reshape(-1, 3)
    total = 0.0
    for piece in region.pieces:
        lo, hi = piece.bounds
        near = np.all((c >= lo - 1.0) & (c <= hi + 1.0), axis=1)
        for center in c[near]:
            total += ball_polytope_volume(piece, center, 1.0)
    return total


def region_from(pieces: Iterable[ConvexPolyhedron], owner: Optional[int] = None) -> Region:
    """Agrupa peças convexas numa região."""
    return Region(pieces=list(pieces), owner=owner)
