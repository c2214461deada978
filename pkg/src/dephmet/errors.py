"""Exception types shared across the package.

All derive from ValueError so callers that only care about "bad input"
can catch one thing; the subclasses exist for targeted handling in the
service layer and for precise tests.
"""


class CapacityError(ValueError):
    """Requested dense object exceeds the configured size limit."""


class AccuracyError(ValueError):
    """A numerical routine could not reach its accuracy target."""


class DegenerateProbeError(ValueError):
    """Probe construction or timescales hit a degenerate spectrum."""


class UnsupportedConfigurationError(ValueError):
    """Configuration is outside the regime where the result is defined."""


class SamplingError(ValueError):
    """Not enough sample points for a well-posed fit."""
