"""Exception types raised across the package."""


class AdmmRegError(Exception):
    """Base class for all package errors."""


class DimensionError(AdmmRegError, ValueError):
    """An array does not have the shape an operator or function expects."""


class ParameterError(AdmmRegError, ValueError):
    """A constructor or routine received an invalid parameter."""


class UnsupportedCombinationError(AdmmRegError):
    """The requested solver cannot handle the given operator pair."""


class SolverFailure(AdmmRegError, RuntimeError):
    """An inner solver did not converge or produced non-finite values."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class StateError(AdmmRegError):
    """A quantity was requested from a state where it is undefined."""


class IdenticalImagesError(AdmmRegError, ValueError):
    """PSNR is infinite because the two images coincide."""


class InfeasibleError(AdmmRegError):
    """The constraint ``Ax = b`` has no solution."""
