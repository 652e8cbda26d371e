"""Exception types shared by every module."""


class DomainError(ValueError):
    """An input lies outside the domain where an operation is defined."""


class NumericalFailure(ArithmeticError):
    """A numerical routine failed to converge or failed a self-check."""


class CapacityError(ValueError):
    """A request exceeds a hard size limit (window length, Hilbert space dimension)."""
