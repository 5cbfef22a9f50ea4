"""
Fixtures compartilhadas dos testes.

Os blocos CFC/HCP usam margem 10 em vez da margem padrão 12√2: a estrela de
um vértice perto da origem continua inteiramente determinada e o bloco fica
pequeno o bastante para os testes.
"""

import math

import numpy as np
import pytest

from kepler.core.config import settings
from kepler.core.logging import configure_logging
from kepler.models.packing import Packing
from kepler.services.geometry import make_tetra, tetra_from_lengths
from kepler.services.oracle import MonteCarloOracle
from kepler.services.packing import gen_fcc, gen_hcp
from kepler.services.scoring import Scorer

TEST_MARGIN = 10.0
SQRT2 = math.sqrt(2.0)

configure_logging("WARNING")


def origin_index(packing: Packing) -> int:
    """Índice do centro mais próximo da origem."""
    return int(np.argmin(np.linalg.norm(packing.centers, axis=1)))


@pytest.fixture(scope="session")
def fcc() -> Packing:
    return gen_fcc(2, margin=TEST_MARGIN)


@pytest.fixture(scope="session")
def fcc_scorer(fcc: Packing) -> Scorer:
    return Scorer(fcc, margin=TEST_MARGIN, threads=1)


@pytest.fixture(scope="session")
def fcc_vertex(fcc: Packing) -> int:
    return origin_index(fcc)


@pytest.fixture(scope="session")
def hcp() -> Packing:
    return gen_hcp(2, margin=TEST_MARGIN)


@pytest.fixture(scope="session")
def hcp_scorer(hcp: Packing) -> Scorer:
    return Scorer(hcp, margin=TEST_MARGIN, threads=1)


@pytest.fixture
def regular_tetra():
    return tetra_from_lengths([2.0] * 6)


@pytest.fixture
def ql_quarter():
    """Quarto de octaedro regular: cinco arestas 2 e espinha 2√2 entre os vértices 0 e 1."""
    return make_tetra(
        [[SQRT2, 0.0, 0.0], [-SQRT2, 0.0, 0.0], [0.0, SQRT2, 0.0], [0.0, 0.0, SQRT2]],
        indices=(0, 1, 2, 3),
    )


@pytest.fixture
def corner_tetra():
    """Simplexo de canto com três arestas unitárias ortogonais."""
    return make_tetra([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])


@pytest.fixture
def oracle() -> MonteCarloOracle:
    return MonteCarloOracle(seed=1234, samples=400_000)


@pytest.fixture
def restore_settings():
    """Restaura os campos da configuração global alterados pelo teste."""
    snapshot = settings.model_dump()
    yield settings
    for field, value in snapshot.items():
        setattr(settings, field, value)
