"""Virtually photon-subtracted two-mode squeezed vacuum sources.

A TMSV state of variance V has Schmidt parameter
lambda = sqrt((V-1)/(V+1)).  Splitting one arm on a beam splitter of
transmittance ``t_ps`` and projecting the tap onto the k-photon Fock
state implements k-photon subtraction.  The same output statistics are
obtained with no non-Gaussian hardware at all: keep each Gaussian
modulation sample with a Poisson-shaped acceptance probability
(``selection_probability``) and the surviving ensemble is exactly the
photon-subtracted source.  This module holds the closed forms for both
pictures.

Convention note: acceptance weights assume samples (x, p) drawn with
per-quadrature variance (V+1)/2, i.e. raw heterodyne outcomes.  With
that scaling, r2 = x^2 + p^2 is exponential with mean V+1, and
averaging ``selection_probability`` over the sample distribution
reproduces ``success_probability`` identically (see the tests for the
quadrature check).  That normalisation pins the factor 1/2 in the
exponent; other quadrature conventions rescale it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError
from .gaussian import TwoModeCovariance

# The closed forms are exact for any k, but nothing interesting survives
# past a few subtracted photons; capping k keeps factorials a table lookup.
MAX_SUBTRACTED_PHOTONS = 8
_FACTORIAL = (1, 1, 2, 6, 24, 120, 720, 5040, 40320)


@dataclass(frozen=True)
class SourceParams:
    """One party's (virtually) photon-subtracted TMSV source.

    v:    TMSV quadrature variance in SNU, > 1.
    k:    number of subtracted photons; k = 0 with t_ps = 1 means the
          plain TMSV source (no beam splitter at all).
    t_ps: beam-splitter transmittance of the subtraction tap, in (0, 1].
    """

    v: float
    k: int = 0
    t_ps: float = 1.0

    def __post_init__(self):
        if not self.v > 1.0:
            raise DomainError(f"source variance must be > 1 SNU, got {self.v!r}")
        if not isinstance(self.k, int) or not 0 <= self.k <= MAX_SUBTRACTED_PHOTONS:
            raise DomainError(
                f"subtracted photon number must be an integer in [0, "
                f"{MAX_SUBTRACTED_PHOTONS}], got {self.k!r}"
            )
        if not 0.0 < self.t_ps <= 1.0:
            raise DomainError(f"t_ps must lie in (0, 1], got {self.t_ps!r}")

    @property
    def lambda_sq(self) -> float:
        """Squared Schmidt parameter (V-1)/(V+1), in (0, 1)."""
        return (self.v - 1.0) / (self.v + 1.0)

    def _tap_denominator(self) -> float:
        # 1 - t*lambda^2, evaluated as (1-t) + t*(1-lambda^2) so the
        # t_ps = 1 case keeps full precision at large V.
        return (1.0 - self.t_ps) + self.t_ps * (2.0 / (self.v + 1.0))


@dataclass(frozen=True)
class ModulationSample:
    """One Gaussian modulation / heterodyne data pair (x, p) in SNU."""

    x: float
    p: float


def success_probability(src: SourceParams) -> float:
    """Unconditional probability of subtracting exactly k photons.

    P = (1 - l2)/(1 - t*l2) * [l2 (1 - t)/(1 - t*l2)]^k  with l2 = lambda^2.
    Summing over k gives 1 (geometric series).  For the plain source
    (k = 0, t_ps = 1) this is exactly 1.
    """
    denom = src._tap_denominator()
    return (2.0 / (src.v + 1.0)) / denom * (src.lambda_sq * (1.0 - src.t_ps) / denom) ** src.k


def selection_probability(src: SourceParams, sample: ModulationSample) -> float:
    """Per-sample acceptance probability of the post-selection filter.

    w = (1 - t_ps) * lambda^2 * (x^2 + p^2) / 2, acceptance e^-w w^k / k!.
    Samples are assumed drawn with per-quadrature variance (V+1)/2; under
    that convention the mean acceptance equals ``success_probability``.
    """
    w = 0.5 * (1.0 - src.t_ps) * src.lambda_sq * (
        sample.x * sample.x + sample.p * sample.p
    )
    if src.k == 0:
        return math.exp(-w)
    if w == 0.0:
        return 0.0
    return math.exp(-w) * w ** src.k / _FACTORIAL[src.k]


def subtracted_covariance(src: SourceParams) -> TwoModeCovariance:
    """Covariance matrix of the kept pair (retained mode, transmitted mode).

    With v' = (k+1)/(1 - t*lambda^2):

        a = 2 v' - 1            (retained, heterodyned mode)
        c = 2 sqrt(t) lambda v'
        b = 2 t lambda^2 v' + 1 (mode sent into the channel)

    For k = 0, t_ps = 1 this collapses to the TMSV matrix
    (V, V, sqrt(V^2 - 1)).  The identity c^2 = (b - 1)(a + 1) holds for
    every member of the family.
    """
    l2 = src.lambda_sq
    t = src.t_ps
    v_prime = (src.k + 1.0) / src._tap_denominator()
    a = 2.0 * v_prime - 1.0
    c = 2.0 * math.sqrt(t * l2) * v_prime
    b = 2.0 * t * l2 * v_prime + 1.0
    return TwoModeCovariance(a=a, b=b, c=c)
