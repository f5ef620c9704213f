"""Two-mode Gaussian state algebra in shot-noise units.

Everything here works on symmetric two-mode covariance matrices of the
standard form

    [[ a*I,       c*sigma_z ],
     [ c*sigma_z, b*I       ]]

with the vacuum quadrature variance normalised to 1 (SNU), so the
Heisenberg bound reads ``a, b >= 1`` and a symplectic eigenvalue of 1
marks a pure mode.  The module provides the symplectic spectrum, the
bosonic entropy function G, the resulting von Neumann entropy, and the
variance update of one mode after heterodyne detection of the other.
All functions are pure and thread-safe.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from fractions import Fraction

from .errors import DomainError, NonPhysicalState

# Symplectic eigenvalues within a window of 1 are treated as float rounding
# and snapped to exactly 1; anything below the window is an upstream
# parameter bug and raises.  The window is at least this wide and grows
# with the matrix norm (see symplectic_eigenvalues).
EIGENVALUE_CLAMP = 1e-6

# Absolute tolerance on the discriminant of the eigenvalue formula before a
# matrix is declared unphysical.
_DISCRIMINANT_TOL = 1e-6

# When the discriminant retains less than ~9 significant digits relative to
# its cancellation scale, fall back to exact rational evaluation.
_DISC_PRECISION_GUARD = 1e-9

_FLOAT_EPS = sys.float_info.epsilon


@dataclass(frozen=True)
class TwoModeCovariance:
    """Covariance matrix (a*I, c*sigma_z; c*sigma_z, b*I) in SNU.

    ``c`` appears with opposite signs on the x and p quadratures (the
    sigma_z block structure typical of two-mode squeezing).  No a-priori
    bound on |c| is enforced here: physicality is checked through the
    symplectic spectrum, where it actually matters.
    """

    a: float
    b: float
    c: float

    def __post_init__(self):
        if not (self.a >= 1.0 - EIGENVALUE_CLAMP and self.b >= 1.0 - EIGENVALUE_CLAMP):
            raise NonPhysicalState(
                f"mode variances must be >= 1 SNU, got a={self.a!r}, b={self.b!r}"
            )

    def determinant(self) -> float:
        """det of the full 4x4 matrix, (ab - c^2)^2 for this block form."""
        return (self.a * self.b - self.c * self.c) ** 2


@dataclass(frozen=True)
class SymplecticSpectrum:
    """Symplectic eigenvalues of a two-mode covariance matrix, descending."""

    lambda1: float
    lambda2: float


def tmsv_covariance(v: float) -> TwoModeCovariance:
    """Two-mode squeezed vacuum of quadrature variance ``v``: (v, v, sqrt(v^2-1))."""
    if v < 1.0:
        raise DomainError(f"TMSV variance must be >= 1 SNU, got {v!r}")
    return TwoModeCovariance(a=v, b=v, c=math.sqrt(v * v - 1.0))


def symplectic_eigenvalues(gamma: TwoModeCovariance) -> SymplecticSpectrum:
    """Symplectic spectrum via Delta = a^2 + b^2 - 2c^2.

    lambda_+^2 = (Delta + sqrt(Delta^2 - 4 det)) / 2 with
    det = (ab - c^2)^2; the small eigenvalue comes from the product
    identity lambda_+ lambda_- = |ab - c^2| rather than the subtractive
    branch.  Near-pure states at large variance cancel Delta^2 against
    4 det almost completely, so when the float discriminant has lost
    its significand the three invariants are recomputed in exact
    rational arithmetic (floats are rationals; only the final square
    roots round).  Tiny negative discriminants are clamped to zero;
    eigenvalues inside the clamp window snap to exactly 1.
    """
    a, b, c = gamma.a, gamma.b, gamma.c
    delta = a * a + b * b - 2.0 * c * c
    det_root = abs(a * b - c * c)
    disc = delta * delta - 4.0 * det_root * det_root
    scale = delta * delta + 4.0 * det_root * det_root
    if disc < _DISC_PRECISION_GUARD * scale:
        fa, fb, fc = Fraction(a), Fraction(b), Fraction(c)
        f_delta = fa * fa + fb * fb - 2 * fc * fc
        f_det_root = abs(fa * fb - fc * fc)
        f_disc = f_delta * f_delta - 4 * f_det_root * f_det_root
        if f_disc < 0:
            if float(f_disc) < -_DISCRIMINANT_TOL:
                raise NonPhysicalState(
                    f"complex symplectic spectrum (discriminant {float(f_disc)!r}) "
                    f"for (a={a!r}, b={b!r}, c={c!r})"
                )
            f_disc = Fraction(0)
        delta, det_root, disc = float(f_delta), float(f_det_root), float(f_disc)
    root = math.sqrt(disc)
    lam_plus = math.sqrt(max((delta + root) / 2.0, 0.0))
    if lam_plus <= 0.0:
        raise NonPhysicalState(
            f"degenerate symplectic spectrum for (a={a!r}, b={b!r}, c={c!r})"
        )
    # The float representation of the inputs alone perturbs the spectrum by
    # O(norm * eps) -- e.g. rounding c = sqrt(V^2-1) at V = 1e6 shifts the
    # pure-state eigenvalues by ~1e-5 -- so the snap window grows with the
    # matrix norm, never falls below the nominal tolerance, and acts on
    # both sides of 1: within it, purity and float noise are
    # indistinguishable.
    window = max(EIGENVALUE_CLAMP, 4.0 * _FLOAT_EPS * (a * a + b * b + 2.0 * c * c))
    lams = []
    for lam in (lam_plus, det_root / lam_plus):
        if lam < 1.0 - window:
            raise NonPhysicalState(
                f"symplectic eigenvalue {lam!r} below the vacuum bound for "
                f"(a={a!r}, b={b!r}, c={c!r})"
            )
        lams.append(1.0 if lam < 1.0 + window else lam)
    lams.sort(reverse=True)
    return SymplecticSpectrum(lambda1=lams[0], lambda2=lams[1])


def entropy_g(lam: float) -> float:
    """Bosonic entropy G(lam) in bits.

    G(lam) = ((lam+1)/2) log2((lam+1)/2) - ((lam-1)/2) log2((lam-1)/2),
    the von Neumann entropy of a thermal mode with symplectic eigenvalue
    ``lam``.  G(1) = 0 exactly: the (lam-1) term is skipped rather than
    evaluated as 0*log(0).
    """
    if lam < 1.0 - EIGENVALUE_CLAMP:
        raise DomainError(f"symplectic eigenvalue must be >= 1, got {lam!r}")
    if lam <= 1.0:
        return 0.0
    xp = (lam + 1.0) / 2.0
    xm = (lam - 1.0) / 2.0
    return xp * math.log2(xp) - xm * math.log2(xm)


def von_neumann_entropy(gamma: TwoModeCovariance) -> float:
    """Entropy of the two-mode Gaussian state: sum of G over the spectrum."""
    spectrum = symplectic_eigenvalues(gamma)
    return entropy_g(spectrum.lambda1) + entropy_g(spectrum.lambda2)


def heterodyne_condition_single(v_a: float, c: float, v_b: float) -> float:
    """Variance of mode A after heterodyne detection of mode B.

    Standard Schur-complement update with the one unit of vacuum noise a
    heterodyne measurement adds: v_cond = v_a - c^2 / (v_b + 1).
    Heterodyning one arm of a TMSV leaves the other in a coherent state,
    so (v, sqrt(v^2-1), v) maps to exactly 1.
    """
    if v_b + 1.0 <= 0.0:
        raise DomainError(f"conditioned-mode variance {v_b!r} makes v_b + 1 non-positive")
    return v_a - c * c / (v_b + 1.0)
