"""Exception types shared across the package."""


class DupDelError(Exception):
    """Base class for package errors."""


class ValidationError(DupDelError, ValueError):
    """Invalid parameters or inconsistent inputs."""


class StateError(DupDelError, RuntimeError):
    """A transition was requested that the current clique state cannot support."""


class NonConvergenceError(DupDelError, ArithmeticError):
    """A numerical procedure did not reach its tolerance within budget."""


class QuadratureError(NonConvergenceError):
    """Quadrature failed to meet the requested tolerance.

    ``worst_k`` is the index whose estimated error was largest and
    ``error`` that estimate.
    """

    def __init__(self, message, worst_k=None, error=None):
        super().__init__(message)
        self.worst_k = worst_k
        self.error = error


class SeriesDivergenceError(NonConvergenceError):
    """A power series hit its iteration cap before the terms became negligible."""
