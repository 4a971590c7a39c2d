"""Entanglement and magic resources of topologically frustrated spin chains."""

from .errors import (
    ContractError,
    ConvergenceError,
    DomainError,
    ResourceError,
    TFResourceError,
    UsageError,
)
from .model import Boundary, ModelSpec, build
from .spin import PauliString, StateVector, SymmetrySector

__version__ = "0.1.0"

__all__ = [
    "Boundary",
    "ContractError",
    "ConvergenceError",
    "DomainError",
    "ModelSpec",
    "PauliString",
    "ResourceError",
    "StateVector",
    "SymmetrySector",
    "TFResourceError",
    "UsageError",
    "build",
    "__version__",
]
