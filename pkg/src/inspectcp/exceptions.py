"""Exception types raised by the package."""


class InspectError(Exception):
    """Base class for all package errors."""


class InvalidInputError(InspectError, ValueError):
    """Raised when arguments violate an operation's preconditions."""


class SolverError(InspectError, RuntimeError):
    """Raised when a numerical routine fails (e.g. SVD non-convergence)."""


class ThresholdTooLargeError(InspectError, ValueError):
    """Raised when soft-thresholding annihilates the whole CUSUM matrix.

    The caller should lower ``lambda`` or treat the input as carrying no
    detectable change.
    """


class CombinatorialGuardError(InvalidInputError):
    """Raised when an exhaustive search would enumerate too many subsets."""
