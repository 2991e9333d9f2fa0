"""Numerical lab for scrambling diagnostics: OTOCs, Loschmidt echoes and
their Haar/noise-averaged counterparts on exact-diagonalization models
(random-matrix, SYK) and analytic Gaussian dynamics (coupled inverted
oscillators)."""

__version__ = "0.1.0"

from . import analysis, correlators, ensembles, experiments, iho, linalg, models
from .linalg import BipartitePartition, EigenDecomposition
from .correlators import DecayCurve, TimeGrid
from .ensembles import RngStream

__all__ = [
    "analysis",
    "correlators",
    "ensembles",
    "iho",
    "linalg",
    "models",
    "BipartitePartition",
    "EigenDecomposition",
    "DecayCurve",
    "TimeGrid",
    "RngStream",
]
