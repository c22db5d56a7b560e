"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration: bad dimensions, unknown names, out-of-range values."""


class UsageError(ValueError):
    """Operation called with inconsistent or insufficient data."""


class NumericFault(ArithmeticError):
    """Non-finite values or a numerically unsolvable system encountered."""
