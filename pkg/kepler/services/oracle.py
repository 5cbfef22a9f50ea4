"""
Oráculo de Monte Carlo semeado.

Estimadores independentes de volume, volume coberto, ângulo sólido e compressão,
contra os quais toda fórmula analítica é testada. A amostragem é estratificada
por peça da região, com sementes derivadas da semente mestre por
`numpy.random.SeedSequence`, de modo que o resultado é idêntico bit a bit para
as mesmas entradas.
"""

import math
from typing import Callable, Iterator, List, Optional, Sequence, Union

import numpy as np
from scipy.spatial import cKDTree

from kepler.core.config import settings
from kepler.core.logging import LoggerMixin
from kepler.models.geometry import ConvexPolyhedron, Region, Tetra
from kepler.models.oracle import McEstimate
from kepler.models.scoring import Constants

BATCH = 1 << 18


class OracleError(Exception):
    """Erro específico do oráculo de Monte Carlo."""
    pass


class ToleranceNotMetError(OracleError):
    """Precisão pedida não atingida dentro do orçamento de amostras."""

    def __init__(self, message: str, estimate: McEstimate):
        super().__init__(message)
        self.estimate = estimate


def derive_rng(seed: int, *keys: int) -> np.random.Generator:
    """Gerador determinístico derivado da semente mestre e de chaves inteiras."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *(int(k) for k in keys)]))


def _batches(n: int) -> Iterator[int]:
    remaining = n
    while remaining > 0:
        size = min(BATCH, remaining)
        remaining -= size
        yield size


def _as_region(r: Union[Region, ConvexPolyhedron]) -> Region:
    return r if isinstance(r, Region) else Region(pieces=[r])


class MonteCarloOracle(LoggerMixin):
    """
    Estimadores de Monte Carlo por acerto ou erro.

    Cada peça convexa é amostrada uniformemente na sua caixa envolvente, com
    número de amostras proporcional ao volume da caixa.
    """

    def __init__(self, seed: Optional[int] = None, samples: Optional[int] = None):
        self.seed = settings.seed if seed is None else int(seed)
        self.samples = settings.mc_samples if samples is None else int(samples)

    # === ESTRATIFICAÇÃO ===

    def _strata(self, region: Region, n_samples: int) -> List[tuple]:
        if not region.pieces:
            return []
        boxes = []
        for piece in region.pieces:
            lo, hi = piece.bounds
            extent = hi - lo
            if np.any(extent <= 0):
                raise OracleError("Caixa envolvente degenerada")
            boxes.append((piece, lo, hi, float(np.prod(extent))))
        total = sum(b[3] for b in boxes)
        strata = []
        for piece, lo, hi, vol in boxes:
            n = max(1000, int(round(n_samples * vol / total)))
            strata.append((piece, lo, hi, vol, n))
        return strata

    def _estimate(
        self,
        region: Region,
        n_samples: int,
        seed: int,
        integrand,
    ) -> McEstimate:
        """Soma por estratos da média de `integrand` escalada pelo volume da caixa."""
        parts = []
        for index, (piece, lo, hi, vol, n) in enumerate(self._strata(region, n_samples)):
            rng = derive_rng(seed, index)
            s1 = 0.0
            s2 = 0.0
            for size in _batches(n):
                points = lo + (hi - lo) * rng.random((size, 3))
                values = integrand(piece, points)
                s1 += float(values.sum())
                s2 += float((values**2).sum())
            mean = s1 / n
            var = max(s2 / n - mean * mean, 0.0)
            parts.append(
                McEstimate(value=vol * mean, stderr=vol * math.sqrt(var / n), samples=n, seed=seed)
            )
        if not parts:
            return McEstimate(value=0.0, stderr=0.0, samples=0, seed=seed)
        return McEstimate.merge(parts, seed)

    # === ESTIMADORES ===

    def mc_volume(
        self, r: Union[Region, ConvexPolyhedron], n_samples: Optional[int] = None, seed: Optional[int] = None
    ) -> McEstimate:
        """
        Volume por acerto ou erro.

        Args:
            r: Região ou poliedro limitado
            n_samples: Total de amostras (padrão: settings.mc_samples)
            seed: Semente (padrão: settings.seed)

        Returns:
            McEstimate: Valor e erro padrão

        Raises:
            OracleError: Se alguma caixa envolvente é degenerada
        """
        region = _as_region(r)
        seed = self.seed if seed is None else seed
        n = self.samples if n_samples is None else n_samples

        def inside(piece: ConvexPolyhedron, points: np.ndarray) -> np.ndarray:
            return piece.contains(points).astype(float)

        return self._estimate(region, n, seed, inside)

    def mc_covered_volume(
        self,
        r: Union[Region, ConvexPolyhedron],
        centers: np.ndarray,
        n_samples: Optional[int] = None,
        seed: Optional[int] = None,
    ) -> McEstimate:
        """Volume da região dentro da união de bolas unitárias nos centros."""
        region = _as_region(r)
        seed = self.seed if seed is None else seed
        n = self.samples if n_samples is None else n_samples
        tree = cKDTree(np.asarray(centers, dtype=float).reshape(-1, 3))

        def covered(piece: ConvexPolyhedron, points: np.ndarray) -> np.ndarray:
            dist, _ = tree.query(points, k=1)
            return (piece.contains(points) & (dist <= 1.0)).astype(float)

        return self._estimate(region, n, seed, covered)

    def mc_compression(
        self,
        r: Union[Region, ConvexPolyhedron],
        centers: np.ndarray,
        n_samples: Optional[int] = None,
        seed: Optional[int] = None,
    ) -> McEstimate:
        """
        Compressão Γ = coberto − δ_oct·volume, estimada com o mesmo lote de
        amostras para que o erro padrão inclua a covariância.
        """
        region = _as_region(r)
        seed = self.seed if seed is None else seed
        n = self.samples if n_samples is None else n_samples
        tree = cKDTree(np.asarray(centers, dtype=float).reshape(-1, 3))

        def compression(piece: ConvexPolyhedron, points: np.ndarray) -> np.ndarray:
            inside = piece.contains(points)
            dist, _ = tree.query(points, k=1)
            return inside * ((dist <= 1.0) - Constants.DELTA_OCT)

        return self._estimate(region, n, seed, compression)

    def mc_solid_angle(
        self, apex: int, tetra: Tetra, n_samples: Optional[int] = None, seed: Optional[int] = None
    ) -> McEstimate:
        """
        Ângulo sólido por amostragem uniforme de direções.

        Args:
            apex: Índice local do vértice (0..3)
            tetra: Tetraedro
        """
        seed = self.seed if seed is None else seed
        n = self.samples if n_samples is None else n_samples
        v = tetra.vertices
        edges = np.array([v[i] - v[apex] for i in range(4) if i != apex]).T
        inverse = np.linalg.inv(edges)
        rng = derive_rng(seed, apex)
        hits = 0
        for size in _batches(n):
            directions = rng.standard_normal((size, 3))
            coeffs = directions @ inverse.T
            hits += int(np.all(coeffs >= 0.0, axis=1).sum())
        p = hits / n
        return McEstimate(
            value=4.0 * math.pi * p,
            stderr=4.0 * math.pi * math.sqrt(p * (1.0 - p) / n),
            samples=n,
            seed=seed,
        )

    def mc_point_location(
        self,
        pieces: Sequence[ConvexPolyhedron],
        lower: np.ndarray,
        upper: np.ndarray,
        n_samples: int,
        seed: Optional[int] = None,
        tol: float = 1e-10,
    ) -> np.ndarray:
        """
        Conta, para amostras uniformes numa caixa, quantas peças contêm cada ponto.

        Returns:
            np.ndarray: Contagem por amostra (partição correta ⇔ tudo igual a 1)
        """
        seed = self.seed if seed is None else seed
        rng = derive_rng(seed, 7919)
        counts = []
        bounds = [piece.bounds for piece in pieces]
        for size in _batches(n_samples):
            points = lower + (upper - lower) * rng.random((size, 3))
            count = np.zeros(size, dtype=int)
            for piece, (lo, hi) in zip(pieces, bounds):
                mask = np.all((points >= lo - tol) & (points <= hi + tol), axis=1)
                if not np.any(mask):
                    continue
                inside = piece.contains(points[mask], -tol)
                count[np.flatnonzero(mask)[inside]] += 1
            counts.append(count)
        return np.concatenate(counts) if counts else np.zeros(0, dtype=int)

    # === PRECISÃO ADAPTATIVA ===

    def mc_to_precision(
        self,
        estimator: Callable[[int], McEstimate],
        target_stderr: Optional[float] = None,
        max_samples: Optional[int] = None,
    ) -> McEstimate:
        """
        Repete um estimador dobrando as amostras até o erro padrão alvo.

        Args:
            estimator: Função do número de amostras, p.ex.
                `lambda n: oracle.mc_compression(piece, centers, n_samples=n)`
            target_stderr: Erro padrão alvo (padrão: settings.mc_target_stderr)
            max_samples: Limite de amostras por tentativa (padrão: settings.mc_max_samples)

        Raises:
            ToleranceNotMetError: Se o limite se esgota antes do alvo, com a última estimativa
        """
        target = settings.mc_target_stderr if target_stderr is None else float(target_stderr)
        limit = settings.mc_max_samples if max_samples is None else int(max_samples)
        n = min(self.samples, limit)
        while True:
            estimate = estimator(n)
            if estimate.stderr <= target:
                return estimate
            if 2 * n > limit:
                self.logger.warning(
                    "mc_tolerance_not_met", stderr=estimate.stderr, target=target, samples=estimate.samples
                )
                raise ToleranceNotMetError(
                    f"Erro padrão {estimate.stderr:.2e} acima de {target:.2e} com {n} amostras", estimate
                )
            n *= 2
