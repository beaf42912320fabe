"""Spectra of the Landau Hamiltonian perturbed by a Z^2-periodic array of point interactions."""

from .errors import (
    ConvergenceError,
    DomainError,
    LandauLatticeError,
    NonConvergenceError,
)
from .harper import RationalFlux, band_spectrum, farey
from .symbols import FourierSymbol, epsilon_estimate

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError",
    "DomainError",
    "FourierSymbol",
    "LandauLatticeError",
    "NonConvergenceError",
    "RationalFlux",
    "__version__",
    "band_spectrum",
    "epsilon_estimate",
    "farey",
]
