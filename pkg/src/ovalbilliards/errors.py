"""Exception hierarchy shared by all modules."""


class BilliardError(Exception):
    """Base class for every error raised by this package."""


class UsageError(BilliardError, ValueError):
    """Arguments are inconsistent with each other (mismatched surfaces, bases...)."""


class DomainError(BilliardError, ValueError):
    """A value lies outside the domain where an operation is defined."""


class NumericalDomainError(DomainError):
    """An arccos/arccosh argument drifted further than the clamping tolerance."""


class DegenerateChordError(DomainError):
    """The two endpoints of a chord coincide."""


class WhisperOrbitError(DomainError):
    """The reflection angle is too close to 0 or pi for a well-posed chord."""


class InvalidOvalError(BilliardError, ValueError):
    """A curve failed one of the oval invariants."""

    def __init__(self, invariant, message=""):
        self.invariant = invariant
        super().__init__(f"{invariant}: {message}" if message else invariant)


class SolverError(BilliardError, RuntimeError):
    """Intersection or root search failed."""


class ConvergenceError(SolverError):
    """An iterative method did not reach its tolerance."""


class TwistDegeneracyError(BilliardError, ArithmeticError):
    """A mixed second derivative vanished, so the residue quotient is undefined."""
