"""Exception hierarchy shared by all modules."""


class LandauLatticeError(Exception):
    """Base class for all package errors."""


class DomainError(LandauLatticeError, ValueError):
    """Argument outside the domain where the requested quantity is defined."""


class PoleError(DomainError):
    """Argument sits on (or within tolerance of) a pole."""


class BranchCutError(DomainError):
    """Argument lies on the branch cut (-inf, 0]."""


class CoincidenceError(DomainError):
    """Kernel requested on the diagonal x == y where it is singular."""


class DivisionDomainError(DomainError):
    """Normalising coefficient vanishes within tolerance."""


class NearSpectrumError(DomainError):
    """Spectral parameter too close to the spectrum for a stable inverse."""


class HermiticityError(LandauLatticeError):
    """A matrix that must be Hermitian failed the Hermiticity check."""


class ConvergenceError(LandauLatticeError, ArithmeticError):
    """An iterative or adaptive numerical procedure missed its tolerance."""


class NonConvergenceError(ConvergenceError):
    """Fixed-point iteration left its contraction region or ran out of steps."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class SymbolOverflowError(LandauLatticeError, OverflowError):
    """Fourier series of a symbol diverges (or overflows) on the requested strip."""
