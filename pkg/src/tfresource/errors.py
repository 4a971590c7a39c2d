"""Exception types shared across the package."""


class TFResourceError(Exception):
    """Base class for all package errors."""


class DomainError(TFResourceError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ContractError(TFResourceError, ValueError):
    """A precondition on an input object (dimension, normalization) is violated."""


class ConvergenceError(TFResourceError, RuntimeError):
    """An iterative solver hit its iteration cap.

    Attributes
    ----------
    best_residual : float
        Smallest residual norm reached before giving up.
    """

    def __init__(self, message: str, best_residual: float):
        super().__init__(f"{message} (best residual {best_residual:.3e})")
        self.best_residual = best_residual


class ResourceError(TFResourceError, RuntimeError):
    """A request exceeds a configured size or memory cap."""


class UsageError(TFResourceError, ValueError):
    """A command-line request is malformed (unknown column, bad plan key)."""
