"""Exception types shared across the package."""


class ConsistencyError(RuntimeError):
    """An internally computed quantity violates a structural bound.

    Raised e.g. when a correlation coefficient leaves [-1, 1] by more than
    rounding tolerance, which indicates a bug rather than bad user input.
    """


class ConfigError(ValueError):
    """Invalid experiment configuration (maps to CLI exit code 2)."""
