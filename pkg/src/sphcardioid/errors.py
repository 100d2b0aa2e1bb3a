"""Exception hierarchy shared by all modules."""


class CardioidError(Exception):
    """Base class for library errors."""


class DomainError(CardioidError, ValueError):
    """Input outside the mathematical domain of an operation."""


class NumericError(CardioidError, ArithmeticError):
    """A numerical routine failed to converge."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class ResourceError(CardioidError):
    """A configured memory or compute budget would be exceeded."""


class CapabilityError(CardioidError):
    """The requested closed form is not available for these parameters."""


class DegenerateEstimateError(CardioidError):
    """An estimator is undefined for the given sample."""
