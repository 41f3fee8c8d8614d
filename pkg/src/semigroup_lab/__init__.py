"""Numerical lab for positive perturbations of the heat semigroup acting on measures."""

from .errors import ConvergenceError, DomainError, GridMismatchError, NotPositiveError, RefusedError
from .measure_core import GridSpec, Measure, SemigroupParams, TestFunction, pairing, seminorm, test_function, tv_norm
from .perturbation import PotentialPerturbation, RankOnePerturbation

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError",
    "DomainError",
    "GridMismatchError",
    "NotPositiveError",
    "RefusedError",
    "GridSpec",
    "Measure",
    "SemigroupParams",
    "TestFunction",
    "pairing",
    "seminorm",
    "test_function",
    "tv_norm",
    "PotentialPerturbation",
    "RankOnePerturbation",
]
