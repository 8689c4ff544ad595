"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Input data violates a structural invariant."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class DomainError(ValueError):
    """A dose lies outside the curve's support."""


class NotEstimableError(ValueError):
    """The requested target rate is not attained by the fitted curve."""


class ZeroSlopeError(ValueError):
    """All knot values are equal, so no positive slope exists."""


class NoIntervalError(ValueError):
    """An inverse interval cannot be formed."""


class DegenerateVarianceError(ValueError):
    """A Binomial variance term is zero (probability at 0 or 1)."""


class ConfigError(ValueError):
    """Simulation configuration is invalid."""
