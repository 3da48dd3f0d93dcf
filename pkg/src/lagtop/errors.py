"""Exception hierarchy shared by every module of the package."""


class LagtopError(Exception):
    """Base class for all package errors."""


class InvalidStateError(LagtopError, ValueError):
    """A state violates the constraint manifold beyond tolerance."""


class DegenerateInputError(LagtopError, ValueError):
    pass


class ConfigError(LagtopError, ValueError):
    """Bad configuration: unknown coupling, malformed parameters, empty grids."""


class StepFailure(LagtopError, RuntimeError):
    """Newton iteration of an implicit step failed to converge."""

    def __init__(self, message, step_index=None, residual=None):
        super().__init__(message)
        self.step_index = step_index
        self.residual = residual


class StructuralError(LagtopError, ValueError):
    """Matrix input lacks the required (infinitesimally symplectic) structure."""


class BracketError(LagtopError, ValueError):
    pass


class DimensionError(LagtopError, ValueError):
    pass


class EstimationError(LagtopError, RuntimeError):
    pass


class CapacityError(LagtopError, ValueError):
    """Polynomial degree exceeds the configured cap."""


class SmallDivisorError(LagtopError, ArithmeticError):
    pass


class UnsupportedCaseError(LagtopError, ValueError):
    pass


class StratumError(LagtopError, ValueError):
    """A value lies in the wrong stratum for the requested computation."""


class ContinuationError(LagtopError, RuntimeError):
    pass


class NumericError(LagtopError, ArithmeticError):
    pass


class DataError(LagtopError, ValueError):
    pass


class PrecisionWarning(UserWarning):
    """Finite-difference step likely dominated by cancellation."""
