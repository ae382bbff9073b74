"""Exception types raised across the package.

Domain errors describe inputs that cannot be processed (wrong dimensions,
under-sampled surfaces, missing zero sets). Numerical errors describe a
computation that broke down on otherwise valid input.
"""


class BandsurfError(Exception):
    """Base class for all package errors."""


class DomainError(BandsurfError, ValueError):
    pass


class NumericalError(BandsurfError, ArithmeticError):
    pass


class ParseError(DomainError):
    """Malformed input file; the message names the offending line or key."""


class DimensionMismatch(DomainError):
    pass


class EmptyCloud(DomainError):
    pass


class NoZeroSetFound(DomainError):
    pass


class AmbiguousRecovery(DomainError):
    """Null space of the minimal feature matrix has dimension > 1."""

    def __init__(self, message, null_dim=None):
        super().__init__(message)
        self.null_dim = null_dim


class NoAnnihilator(DomainError):
    """Feature matrix has a trivial null space."""


class InsufficientCandidates(DomainError):
    pass


class NonFiniteObjective(NumericalError):
    pass


class DegenerateSystem(NumericalError):
    pass
