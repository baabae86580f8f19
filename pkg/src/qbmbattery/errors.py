"""Exception hierarchy shared by every layer of the package."""


class QBMError(Exception):
    """Base class for all package errors."""

    #: short machine-readable tag used by the CLI error line
    code = "error"


class InvalidParameterError(QBMError, ValueError):
    code = "invalid-parameter"


class InvalidDimensionError(InvalidParameterError):
    code = "invalid-dimension"


class PreconditionError(QBMError, ValueError):
    """An input violates a documented precondition (non-Hermitian, unphysical, ...)."""

    code = "precondition"


class DimensionMismatchError(QBMError, ValueError):
    code = "dimension-mismatch"


class TruncationOverflowError(QBMError, RuntimeError):
    """Population reached the top Fock level of a truncated mode."""

    code = "truncation-overflow"

    def __init__(self, message, *, mode=None, population=None, time=None):
        super().__init__(message)
        self.mode = mode
        self.population = population
        self.time = time


class CapacityError(QBMError, RuntimeError):
    """The requested Fock space is larger than the configured cap."""

    code = "capacity"

    def __init__(self, message, *, required=None, available=None):
        super().__init__(message)
        self.required = required
        self.available = available


class ConfigError(QBMError, ValueError):
    code = "config"


class SelfCheckError(QBMError, RuntimeError):
    """Two independent evaluations of the same quantity disagree."""

    code = "self-check"
