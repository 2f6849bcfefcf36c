"""Probabilities that a random positive definite quadratic form takes a small
value at a nonzero integer point: exact lattice minima, spectral and Cholesky
bounds, seeded Monte-Carlo checks and an integer-forcing application.
"""
from .lattice_core import lattice_minimum, has_short_vector, cholesky, spectral_decompose, NotPositiveDefiniteError
from .quadrature import integrate_1d, integrate_mc, IntegrationResult

__version__ = "0.1.0"

__all__ = [
    "lattice_minimum",
    "has_short_vector",
    "cholesky",
    "spectral_decompose",
    "NotPositiveDefiniteError",
    "integrate_1d",
    "integrate_mc",
    "IntegrationResult",
    "__version__",
]
