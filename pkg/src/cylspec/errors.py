"""Exception hierarchy shared by all cylspec modules."""


class CylspecError(Exception):
    """Base class for every error raised by the toolkit."""


class ConfigurationError(CylspecError, ValueError):
    """Unsupported model/cross-section kind or an invalid config key."""


class ParameterError(CylspecError, ValueError):
    """A numeric parameter lies outside its admissible range."""


class DomainError(CylspecError, ValueError):
    """A spectral parameter has no threshold above it."""


class ThresholdError(DomainError):
    """A spectral parameter coincides with a threshold."""


class ContractViolation(CylspecError, ValueError):
    """A documented precondition of an operation was violated."""


class NumericError(CylspecError, ArithmeticError):
    """An iterative method failed to converge or broke down."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class ResourceError(CylspecError, MemoryError):
    """A request would exceed the desk-scale resource caps."""


class InsufficientDataError(CylspecError, ValueError):
    """Too few samples to produce a meaningful fit."""


class PropertyViolation(CylspecError, AssertionError):
    """A structural property (e.g. sectoriality) does not hold."""
