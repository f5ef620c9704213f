"""Asymptotic reverse-reconciliation secret key rate, and the PLOB bound.

The rate for one operating point is

    K = P * max(0, beta * I_AB - chi_BE)

where P is the joint post-selection success probability, I_AB the
heterodyne-heterodyne mutual information and chi_BE the Holevo bound
on Eve's information about Bob's data under collective Gaussian
attacks.  The signed product P * (beta * I_AB - chi_BE) is kept in
``raw_rate`` so that root finders can bracket the zero crossing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError
from .gaussian import (
    TwoModeCovariance,
    entropy_g,
    heterodyne_condition_single,
    symplectic_eigenvalues,
)
from .protocol import AttackModel, LinkParams, end_to_end_covariance, equivalent_channel
from .subtraction import SourceParams, success_probability

# chi_BE values inside [-CHI_CLAMP, 0) are rounding noise and clamp to 0.
_CHI_CLAMP = 1e-9


@dataclass(frozen=True)
class KeyRateBreakdown:
    """All ingredients of the rate at one operating point (bits per pulse)."""

    p_success: float
    i_ab: float
    chi_be: float
    key_rate: float
    raw_rate: float
    beta: float
    insecure: bool
    mu: float
    t_eq: float
    eps_eq: float


def mutual_information(gamma: TwoModeCovariance) -> float:
    """Heterodyne-heterodyne mutual information in bits.

    Both parties measure both quadratures, each adding one vacuum unit:
    I = log2((a + 1) / (v_cond + 1)) with v_cond = a - c^2/(b + 1).
    """
    cond = heterodyne_condition_single(gamma.a, gamma.c, gamma.b)
    return math.log2((gamma.a + 1.0) / (cond + 1.0))


def holevo_bound(gamma: TwoModeCovariance) -> float:
    """Holevo bound chi_BE for reverse reconciliation, in bits.

    Eve purifies the whole state, so S(E) = G(lambda1) + G(lambda2); after
    Bob's heterodyne the Alice-Eve system is pure and S(E|B) = G(lambda3)
    with lambda3 the heterodyne-conditioned single-mode variance.
    """
    spectrum = symplectic_eigenvalues(gamma)
    lambda3 = heterodyne_condition_single(gamma.a, gamma.c, gamma.b)
    chi = entropy_g(spectrum.lambda1) + entropy_g(spectrum.lambda2) - entropy_g(lambda3)
    if chi < 0.0:
        if chi < -_CHI_CLAMP:
            raise DomainError(f"Holevo bound {chi!r} is negative beyond rounding noise")
        chi = 0.0
    return chi


def key_rate(
    src_a: SourceParams,
    src_b: SourceParams,
    link: LinkParams,
    attack: AttackModel = AttackModel(),
    beta: float = 0.95,
    mu: float | None = None,
) -> KeyRateBreakdown:
    """Compose sources, relay reduction and entropies into the final rate.

    A party that does not post-select contributes success probability 1
    (that is the k = 0, t_ps = 1 source).  ``mu=None`` uses the optimal
    displacement gain.
    """
    if not 0.0 < beta <= 1.0:
        raise DomainError(f"reconciliation efficiency must be in (0, 1], got {beta!r}")
    chan = equivalent_channel(src_b, link, attack, mu=mu)
    gamma = end_to_end_covariance(src_a, chan)
    i_ab = mutual_information(gamma)
    chi_be = holevo_bound(gamma)
    p = success_probability(src_a) * success_probability(src_b)
    secret_fraction = beta * i_ab - chi_be
    raw = p * secret_fraction
    return KeyRateBreakdown(
        p_success=p,
        i_ab=i_ab,
        chi_be=chi_be,
        key_rate=max(0.0, raw),
        raw_rate=raw,
        beta=beta,
        insecure=secret_fraction <= 0.0,
        mu=chan.mu,
        t_eq=chan.t_eq,
        eps_eq=chan.eps_eq,
    )


def plob_bound(t_total: float) -> float:
    """Repeaterless secret-key capacity of the pure-loss channel, -log2(1 - T)."""
    if not 0.0 < t_total < 1.0:
        raise DomainError(f"PLOB bound needs transmittance in (0, 1), got {t_total!r}")
    return -math.log2(1.0 - t_total)
