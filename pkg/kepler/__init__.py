"""
Kepler Scoring - decomposições de densidade local para empacotamentos de esferas.

Esta biblioteca constrói as partições de Voronoi, Delaunay e Hales-Ferguson de
empacotamentos saturados finitos, pontua as estrelas de decomposição em cinco
esquemas e verifica a maquinaria que transforma desigualdades locais em cotas
globais de densidade, sempre com um oráculo de Monte Carlo independente.
"""

__version__ = "0.1.0"
__author__ = "Kepler Scoring Team"
__email__ = "dev@company.com"
