"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Array shapes or ranks incompatible with the requested operation."""


class ConfigurationError(ValueError):
    """Invalid geometry, phantom, or experiment configuration."""


class InputError(ValueError):
    """Inconsistent or malformed input data."""


class DomainError(ValueError):
    """Evaluation requested outside the supported domain."""


class DegenerateModelError(ArithmeticError):
    """Model matrix is numerically rank zero, estimation is impossible."""
