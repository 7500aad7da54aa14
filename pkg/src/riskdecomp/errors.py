"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Input data or arguments violate a documented precondition."""


class NumericalError(ArithmeticError):
    """A numerical routine failed to produce a usable result."""
