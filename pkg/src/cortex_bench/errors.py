"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Tensor or assembly shapes are incompatible with an operation."""


class ConfigError(ValueError):
    """A configuration violates one or more invariants.

    ``violations`` lists every problem found, not only the first.
    """

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class UndefinedCorrelationError(ValueError):
    """A correlation was requested for a zero-variance vector."""


class InsufficientDataError(ValueError):
    pass


class ChecksumError(IOError):
    pass
