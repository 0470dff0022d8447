"""Billiards inside ovals on the Euclidean plane, the sphere and the hyperbolic plane."""
from .billiard import PhasePoint, dt_matrix, inverse_map, iterate, next_impact
from .errors import (
    BilliardError,
    ConvergenceError,
    DegenerateChordError,
    DomainError,
    InvalidOvalError,
    SolverError,
    TwistDegeneracyError,
    UsageError,
    WhisperOrbitError,
)
from .geometry import EUCLIDEAN, HYPERBOLIC, SPHERE, SurfaceKind, SurfacePoint, TangentVector
from .orbits import Configuration, PeriodicOrbit, find_birkhoff, newton_refine
from .oval import Oval, OvalSpec, build_oval, normal_perturbation

__all__ = [
    "BilliardError", "ConvergenceError", "DegenerateChordError", "DomainError",
    "InvalidOvalError", "SolverError", "TwistDegeneracyError", "UsageError",
    "WhisperOrbitError", "EUCLIDEAN", "HYPERBOLIC", "SPHERE", "SurfaceKind",
    "SurfacePoint", "TangentVector", "Oval", "OvalSpec", "build_oval",
    "normal_perturbation", "PhasePoint", "next_impact", "inverse_map", "iterate",
    "dt_matrix", "Configuration", "PeriodicOrbit", "find_birkhoff", "newton_refine",
]
__version__ = "0.1.0"
