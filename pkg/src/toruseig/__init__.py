"""Lattice points on spheres and localized mass of Laplace eigenfunctions on flat tori."""

from .errors import OverflowGuardError, PairBudgetExceeded, PreconditionError, TailToleranceError

__version__ = "0.1.0"

__all__ = [
    "OverflowGuardError",
    "PairBudgetExceeded",
    "PreconditionError",
    "TailToleranceError",
]
