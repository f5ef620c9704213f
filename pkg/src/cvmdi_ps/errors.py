"""Exception types raised by the library.

All of them signal caller errors (bad parameters, impossible geometry)
or genuinely empty results (no positive key rate anywhere); none are
recoverable mid-computation.
"""


class NonPhysicalState(ValueError):
    """A covariance matrix violates the Heisenberg bound beyond rounding noise."""


class DomainError(ValueError):
    """A scalar argument lies outside the mathematical domain of an operation."""


class DegenerateSource(ValueError):
    """A source carries no modulation (variance at the vacuum limit)."""


class DegenerateGeometry(ValueError):
    """A channel transmittance is zero; the configuration cannot carry signal."""


class NoPositiveRate(RuntimeError):
    """The key rate is non-positive over the whole search domain."""


class InsufficientAcceptance(RuntimeError):
    """Too few Monte Carlo samples survived post-selection for usable statistics."""
