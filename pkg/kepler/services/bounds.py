"""
Cotas de densidade.

Densidade de cubos, busca por transladados, o funcional f(A, B, θ), o θ
empírico de um empacotamento finito e a verificação telescópica que relaciona a
soma das pontuações ao volume coberto de um cubo.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from itertools import product
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from kepler.core.config import settings
from kepler.core.logging import LoggerMixin, log_check_event, log_pipeline_event
from kepler.models.bounds import (
    BoundResult,
    BoundTableRow,
    DensityEstimate,
    TelescopingReport,
    TelescopingRow,
    ThetaEstimate,
)
from kepler.models.geometry import Region
from kepler.models.packing import Box, Packing
from kepler.models.scoring import Constants, ScoreScheme
from kepler.services.geometry import box_halfspaces, covered_volume, polyhedron_from_halfspaces
from kepler.services.oracle import derive_rng
from kepler.services.scoring import Scorer

TELESCOPING_TRANSLATES = 32


class BoundsError(Exception):
    """Erro específico das cotas de densidade."""
    pass


def unit_ball_volume(n: int) -> float:
    """κ_n = π^(n/2) / Γ(n/2 + 1)."""
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


def bound_f(a: float, b: float, theta: float, n: int = 3) -> BoundResult:
    """
    f(A, B, θ) = κ_n·B / (κ_n·A − θ).

    Args:
        a: Constante A (> 0)
        b: Constante B (> 0)
        theta: Supremo das pontuações de estrela
        n: Dimensão

    Returns:
        BoundResult: Cota (None e `valid=False` quando θ >= κ_n·A)

    Raises:
        BoundsError: Se A ou B não são positivos
    """
    if a <= 0.0 or b <= 0.0:
        raise BoundsError(f"Constantes de pontuação devem ser positivas (A={a}, B={b})")
    kappa = unit_ball_volume(n)
    denominator = kappa * a - theta
    valid = denominator > 0.0
    return BoundResult(
        a=a,
        b=b,
        theta=theta,
        n=n,
        kappa=kappa,
        value=kappa * b / denominator if valid else None,
        valid=valid,
    )


class DensityBounds(LoggerMixin):
    """Medidas de densidade e cotas sobre um empacotamento."""

    def __init__(self, packing: Packing, scorer: Optional[Scorer] = None, margin: Optional[float] = None):
        self.packing = packing
        self.margin = settings.interior_margin if margin is None else margin
        self._scorer = scorer
        self._scorer_margin = margin

    @property
    def scorer(self) -> Scorer:
        if self._scorer is None:
            self._scorer = Scorer(self.packing, margin=self._scorer_margin)
        return self._scorer

    # === DENSIDADE ===

    def density(self, cube: Box) -> float:
        """
        ρ(C) = vol(C ∩ (Ω + B)) / vol(C).

        Raises:
            BoundsError: Se o cubo sai do domínio
        """
        if not self.packing.domain.contains_box(cube):
            raise BoundsError("Cubo fora do domínio do empacotamento")
        poly = polyhedron_from_halfspaces(box_halfspaces(cube))
        if poly is None:
            raise BoundsError("Cubo de volume nulo")
        centers = self.packing.centers
        near = np.all((centers >= cube.lower - 1.0) & (centers <= cube.upper + 1.0), axis=1)
        return covered_volume(Region(pieces=[poly]), centers[near]) / cube.volume

    def upper_density(
        self,
        side: float,
        stride: Optional[float] = None,
        max_translates: Optional[int] = None,
    ) -> DensityEstimate:
        """
        Maior densidade entre cubos transladados de lado `side` dentro do domínio.

        Grade de cantos inferiores com passo `stride` (afinada se excede
        `max_translates`), seguida de refinamento local com passo stride/4 em
        torno do melhor. O resultado é uma cota inferior do supremo.

        Raises:
            BoundsError: Se nenhum cubo de lado `side` cabe no domínio
        """
        stride = settings.density_translate_stride if stride is None else stride
        limit = settings.density_max_translates if max_translates is None else max_translates
        domain = self.packing.domain
        lo = domain.lower
        hi = domain.upper - side
        if np.any(hi < lo - 1e-12):
            raise BoundsError(f"Cubo de lado {side} não cabe no domínio")
        hi = np.maximum(hi, lo)

        axes = [np.arange(lo[k], hi[k] + 1e-12, stride) for k in range(3)]
        per_axis = max(1, int(round(limit ** (1.0 / 3.0))))
        axes = [ax if len(ax) <= per_axis else np.linspace(ax[0], ax[-1], per_axis) for ax in axes]
        corners = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
        values = self._densities(corners, side)
        best = int(np.argmax(values))

        offsets = np.array([-1.0, 0.0, 1.0]) * stride / 4.0
        local = np.stack(np.meshgrid(offsets, offsets, offsets, indexing="ij"), axis=-1).reshape(-1, 3)
        refined = np.clip(corners[best] + local, lo, hi)
        refined_values = self._densities(refined, side)
        tried = len(corners) + len(refined)
        if refined_values.max() > values[best]:
            corner, density = refined[int(np.argmax(refined_values))], float(refined_values.max())
        else:
            corner, density = corners[best], float(values[best])

        log_pipeline_event("upper_density_done", stage="bound", side=side, density=density, translates=tried)
        return DensityEstimate(
            side=side,
            density=density,
            best_translate=[float(x) for x in corner],
            translates_tried=tried,
            lower_bound_only=True,
        )

    def _densities(self, corners: np.ndarray, side: float) -> np.ndarray:
        cubes = [Box(min=c.tolist(), max=(c + side).tolist()) for c in corners]
        with ThreadPoolExecutor(max_workers=settings.threads) as pool:
            return np.array(list(pool.map(self.density, cubes)))

    # === θ EMPÍRICO ===

    def empirical_theta(self, scheme: ScoreScheme, vertices: Optional[Iterable[int]] = None) -> ThetaEstimate:
        """
        Máximo das pontuações de estrela sobre vértices interiores.

        É uma cota inferior do supremo verdadeiro, que percorre todos os
        empacotamentos saturados.

        Raises:
            BoundsError: Se não há vértices interiores
        """
        stars = self.scorer.score_vertices(scheme, vertices)
        if not stars:
            raise BoundsError("Empacotamento sem vértices interiores")
        best = max(stars, key=lambda s: (s.total, -s.vertex))
        return ThetaEstimate(
            scheme=scheme.label,
            theta=best.total,
            argmax_vertex=best.vertex,
            argmax_point=[float(x) for x in self.packing.centers[best.vertex]],
            vertices=len(stars),
        )

    def bound_table(self, schemes: Sequence[ScoreScheme]) -> List[BoundTableRow]:
        """Linha (A, B, θ empírico, f) por esquema."""
        rows = []
        for scheme in schemes:
            theta = self.empirical_theta(scheme)
            bound = bound_f(scheme.a_const, scheme.b_const, theta.theta)
            rows.append(
                BoundTableRow(
                    scheme=scheme.label,
                    a=bound.a,
                    b=bound.b,
                    theta=theta.theta,
                    f=bound.value,
                    valid=bound.valid,
                    argmax_vertex=theta.argmax_vertex,
                )
            )
        return rows

    # === TELESCÓPICA ===

    def verify_telescoping(
        self,
        scheme: ScoreScheme,
        sides: Sequence[float],
        center: Optional[Sequence[float]] = None,
        translates: int = TELESCOPING_TRANSLATES,
        seed: Optional[int] = None,
    ) -> TelescopingReport:
        """
        Compara Σ_v Score(D(v)) sobre os vértices de um cubo com κ₃A·N − B·T³.

        Para cada lado T, o cubo semiaberto é transladado aleatoriamente dentro de
        uma célula de raio √2 em torno do centro; o resíduo reportado é a média
        quadrática sobre os transladados, e sua razão por T² deve ficar estável
        entre tamanhos consecutivos. A identidade exata sobre regiões interiores
        é conferida com `Scorer.check_admissibility`.

        Raises:
            BoundsError: Se algum cubo não tem margem interior suficiente
        """
        seed = settings.seed if seed is None else int(seed)
        base = np.zeros(3) if center is None else np.asarray(center, dtype=float)
        centers = self.packing.centers
        kappa = unit_ball_volume(3)
        rng = derive_rng(seed, len(sides))
        offsets = rng.uniform(-math.sqrt(2.0), math.sqrt(2.0), size=(translates, 3))

        plans: Dict[float, List[np.ndarray]] = {}
        needed: set = set()
        for side in sides:
            members = []
            for offset in offsets:
                cube = Box.cube(base + offset, side)
                corners = np.array(list(product(*zip(cube.lower, cube.upper))))
                if np.any(self.packing.domain.boundary_distance(corners) < self.margin):
                    raise BoundsError(f"Cubo de lado {side} sem margem interior {self.margin:.3f}")
                inside = np.flatnonzero(np.all((centers >= cube.lower) & (centers < cube.upper), axis=1))
                members.append(inside)
                needed.update(int(i) for i in inside)
            plans[float(side)] = members

        totals = {s.vertex: s.total for s in self.scorer.score_vertices(scheme, sorted(needed))}
        rows = []
        for side in sides:
            residuals = []
            counts = []
            sums = []
            expected = []
            for inside in plans[float(side)]:
                n = len(inside)
                score_sum = float(sum(totals[int(i)] for i in inside))
                target = kappa * scheme.a_const * n - scheme.b_const * side**3
                counts.append(n)
                sums.append(score_sum)
                expected.append(target)
                residuals.append(score_sum - target)
            rms = float(np.sqrt(np.mean(np.square(residuals))))
            sample = plans[float(side)][0][: settings.telescoping_identity_max_regions]
            identity = self.scorer.check_admissibility(scheme, sample.tolist()) if len(sample) else None
            rows.append(
                TelescopingRow(
                    side=float(side),
                    vertices=int(round(float(np.mean(counts)))),
                    score_sum=float(np.mean(sums)),
                    expected=float(np.mean(expected)),
                    residual=rms,
                    residual_over_t2=rms / side**2 if side > 0 else 0.0,
                    interior_regions=identity.regions_checked if identity else 0,
                    interior_identity_gap=identity.max_residual if identity else 0.0,
                )
            )

        ratios = []
        for prev, cur in zip(rows, rows[1:]):
            if prev.residual_over_t2 <= 1e-12:
                ratios.append(1.0 if cur.residual_over_t2 <= 1e-12 else math.inf)
            else:
                ratios.append(cur.residual_over_t2 / prev.residual_over_t2)
        passed = all(0.5 <= r <= 2.0 for r in ratios) and all(abs(r.interior_identity_gap) <= 1e-7 for r in rows)
        report = TelescopingReport(scheme=scheme.label, rows=rows, ratios=ratios, passed=passed)
        log_check_event("telescoping_checked", check="telescoping", passed=passed, scheme=scheme.label, ratios=ratios)
        return report


def density(p: Packing, cube: Box) -> float:
    return DensityBounds(p).density(cube)


def upper_density(p: Packing, side: float) -> DensityEstimate:
    return DensityBounds(p).upper_density(side)


def empirical_theta(p: Packing, scheme: ScoreScheme, margin: Optional[float] = None) -> ThetaEstimate:
    """θ empírico sobre os vértices interiores (ver `DensityBounds.empirical_theta`)."""
    return DensityBounds(p, margin=margin).empirical_theta(scheme)


def verify_telescoping(
    p: Packing, scheme: ScoreScheme, sides: Sequence[float], margin: Optional[float] = None
) -> TelescopingReport:
    return DensityBounds(p, margin=margin).verify_telescoping(scheme, sides)


def kepler_bound() -> BoundResult:
    """f(4, 4δ_oct, 8pt), que vale π/√18."""
    return bound_f(4.0, 4.0 * Constants.DELTA_OCT, 8.0 * Constants.PT)
