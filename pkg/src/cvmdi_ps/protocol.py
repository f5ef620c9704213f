"""Reduction of the two-link relay configuration to one effective one-way channel.

Alice and Bob each keep one mode of a (possibly photon-subtracted)
TMSV source and send the other to an untrusted relay, which mixes the
two on a balanced beam splitter, homodynes both outputs and broadcasts
the outcome.  Bob displaces his retained mode by ``mu`` times the
broadcast.  Treating Bob's source and displacement as untrusted, the
surviving Alice-Bob state is that of a single thermal-loss channel
acting on Alice's source, with

    t_eq   = (T_A / 2) * mu^2
    eps_eq = input-referred excess noise of the effective channel.

Eve may attack the two fibre links independently (one entangling
cloner per link) or with a correlated two-mode ancilla; the
negative-EPR attack implemented here correlates the two cloner modes
maximally and negatively in x (positively in p), which strictly
increases eps_eq whenever both links are lossy.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import DegenerateGeometry, DegenerateSource, DomainError
from .gaussian import TwoModeCovariance
from .subtraction import SourceParams, subtracted_covariance


class AttackKind(enum.Enum):
    INDEPENDENT = "independent"
    NEGATIVE_EPR = "negative-epr"


# Two published-formula readings of how the correlated-attack term C_E is
# normalised; "as-printed" keeps the 2/T_A prefactor inside C_E itself,
# "single-factor" drops it (the bracket already divides by T_A once).
CE_AS_PRINTED = "as-printed"
CE_SINGLE_FACTOR = "single-factor"
_CE_CONVENTIONS = (CE_AS_PRINTED, CE_SINGLE_FACTOR)


@dataclass(frozen=True)
class AttackModel:
    kind: AttackKind = AttackKind.INDEPENDENT
    ce_convention: str = CE_AS_PRINTED

    def __post_init__(self):
        if self.ce_convention not in _CE_CONVENTIONS:
            raise DomainError(
                f"ce_convention must be one of {_CE_CONVENTIONS}, got {self.ce_convention!r}"
            )


@dataclass(frozen=True)
class LinkParams:
    """Channel geometry and per-link excess noise (channel-input referred, SNU)."""

    l_ac_km: float
    l_bc_km: float
    loss_db_per_km: float = 0.2
    eps_a: float = 0.002
    eps_b: float = 0.002

    def __post_init__(self):
        if self.l_ac_km < 0.0 or self.l_bc_km < 0.0:
            raise DomainError("link distances must be >= 0 km")
        if not self.loss_db_per_km > 0.0:
            raise DomainError(f"loss coefficient must be > 0, got {self.loss_db_per_km!r}")
        if self.eps_a < 0.0 or self.eps_b < 0.0:
            raise DomainError("excess noise must be >= 0")

    @property
    def t_a(self) -> float:
        """Alice-relay transmittance 10^(-alpha * L_AC / 10)."""
        return 10.0 ** (-self.loss_db_per_km * self.l_ac_km / 10.0)

    @property
    def t_b(self) -> float:
        return 10.0 ** (-self.loss_db_per_km * self.l_bc_km / 10.0)


@dataclass(frozen=True)
class EquivalentChannel:
    """Effective one-way thermal-loss channel seen by Alice's source."""

    t_eq: float
    eps_eq: float
    mu: float


def optimal_mu(src_b: SourceParams, link: LinkParams) -> float:
    """Displacement gain minimising the effective excess noise.

    mu_opt = sqrt(2 (V_B5 - 1) / (T_B (V_B2 + 1))) where V_B2 is Bob's
    retained-mode variance and V_B5 the transmitted-mode variance.  For a
    plain TMSV of variance V this is sqrt(2 (V-1) / (T_B (V+1))).
    """
    cov = subtracted_covariance(src_b)
    return _optimal_mu_from_entries(v_b2=cov.a, v_b5=cov.b, t_b=link.t_b)


def _optimal_mu_from_entries(v_b2: float, v_b5: float, t_b: float) -> float:
    if t_b <= 0.0:
        raise DegenerateGeometry("Bob-relay transmittance is zero")
    if v_b5 <= 1.0:
        raise DegenerateSource(
            f"transmitted-mode variance {v_b5!r} carries no modulation"
        )
    return math.sqrt(2.0 * (v_b5 - 1.0) / (t_b * (v_b2 + 1.0)))


def eve_correlation_noise(link: LinkParams, attack: AttackModel) -> float:
    """Noise contribution C_E of the correlation between Eve's two modes.

    Zero for independent attacks.  For the negative-EPR attack each
    cloner mode has variance W_j = 1 + T_j eps_j / (1 - T_j) (calibrated
    so the lone cloner reproduces eps_j), and the cross term is maximal
    and negative in x:  <E2x E3x> = -[(W_A^2-1)(W_B^2-1)]^(1/4).
    A lossless link has no injection port, so if either T_j = 1 the
    correlated attack degenerates to the independent one and C_E = 0.
    """
    if attack.kind is not AttackKind.NEGATIVE_EPR:
        return 0.0
    t_a, t_b = link.t_a, link.t_b
    if 1.0 - t_a <= 0.0 or 1.0 - t_b <= 0.0:
        return 0.0
    w_a = 1.0 + t_a * link.eps_a / (1.0 - t_a)
    w_b = 1.0 + t_b * link.eps_b / (1.0 - t_b)
    corr = -((w_a * w_a - 1.0) * (w_b * w_b - 1.0)) ** 0.25
    prefactor = 2.0 / t_a if attack.ce_convention == CE_AS_PRINTED else 2.0
    return prefactor * math.sqrt((1.0 - t_a) * (1.0 - t_b)) * corr


def equivalent_channel(
    src_b: SourceParams,
    link: LinkParams,
    attack: AttackModel = AttackModel(),
    mu: float | None = None,
) -> EquivalentChannel:
    """Collapse relay, displacement and attacks into (t_eq, eps_eq, mu).

    With chi_j = (1 - T_j)/T_j + eps_j the effective excess noise is

        eps_eq = 1 + [T_B (chi_B - 1) + T_A chi_A - C_E] / T_A
                   + [sqrt(2)/mu sqrt(V_B5 - 1) - sqrt(T_B (V_B2 + 1))]^2 / T_A

    The final square vanishes at mu_opt, where (for independent attacks)
    the whole expression collapses to

        eps_eq = eps_A + [T_B (eps_B - 2) + 2] / T_A.

    ``mu=None`` selects mu_opt.
    """
    t_a, t_b = link.t_a, link.t_b
    if t_a <= 0.0:
        raise DegenerateGeometry("Alice-relay transmittance is zero")
    if t_b <= 0.0:
        raise DegenerateGeometry("Bob-relay transmittance is zero")
    cov = subtracted_covariance(src_b)
    v_b2, v_b5 = cov.a, cov.b
    if mu is None:
        mu = _optimal_mu_from_entries(v_b2=v_b2, v_b5=v_b5, t_b=t_b)
    elif mu <= 0.0:
        raise DomainError(f"displacement gain must be > 0, got {mu!r}")
    chi_a = (1.0 - t_a) / t_a + link.eps_a
    chi_b = (1.0 - t_b) / t_b + link.eps_b
    c_e = eve_correlation_noise(link, attack)
    residual = math.sqrt(2.0) / mu * math.sqrt(v_b5 - 1.0) - math.sqrt(t_b * (v_b2 + 1.0))
    eps_eq = (
        1.0
        + (t_b * (chi_b - 1.0) + t_a * chi_a - c_e) / t_a
        + residual * residual / t_a
    )
    return EquivalentChannel(t_eq=0.5 * t_a * mu * mu, eps_eq=eps_eq, mu=mu)


def minimal_excess_noise(link: LinkParams) -> float:
    """Closed form of eps_eq at mu_opt under independent attacks.

    eps_A + [T_B (eps_B - 2) + 2] / T_A; used as a regression anchor for
    the general ``equivalent_channel`` path.
    """
    if link.t_a <= 0.0:
        raise DegenerateGeometry("Alice-relay transmittance is zero")
    return link.eps_a + (link.t_b * (link.eps_b - 2.0) + 2.0) / link.t_a


def end_to_end_covariance(
    src_a: SourceParams, chan: EquivalentChannel
) -> TwoModeCovariance:
    """Alice-Bob covariance after the effective channel.

    (a, c, b) -> (a, sqrt(t_eq) c, t_eq (b - 1) + 1 + t_eq eps_eq) applied
    to Alice's source matrix.
    """
    if chan.t_eq <= 0.0:
        raise DegenerateGeometry(f"effective transmittance must be > 0, got {chan.t_eq!r}")
    cov = subtracted_covariance(src_a)
    return TwoModeCovariance(
        a=cov.a,
        b=chan.t_eq * (cov.b - 1.0) + 1.0 + chan.t_eq * chan.eps_eq,
        c=math.sqrt(chan.t_eq) * cov.c,
    )
