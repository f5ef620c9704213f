import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cvmdi_ps import (
    AttackKind,
    AttackModel,
    DegenerateGeometry,
    DegenerateSource,
    DomainError,
    LinkParams,
    SourceParams,
    end_to_end_covariance,
    equivalent_channel,
    eve_correlation_noise,
    minimal_excess_noise,
    optimal_mu,
    subtracted_covariance,
)
from cvmdi_ps.protocol import CE_SINGLE_FACTOR, EquivalentChannel, _optimal_mu_from_entries

NEG_EPR = AttackModel(kind=AttackKind.NEGATIVE_EPR)


def link(l_ac=10.0, l_bc=0.0, eps=0.002):
    return LinkParams(l_ac_km=l_ac, l_bc_km=l_bc, eps_a=eps, eps_b=eps)


def plain(v=40.0):
    return SourceParams(v=v)


# --- link parameters ----------------------------------------------------------


def test_transmittance_from_distance():
    lk = link(l_ac=10.0, l_bc=25.0)
    assert lk.t_a == pytest.approx(10.0 ** -0.2, rel=1e-15)
    assert lk.t_b == pytest.approx(10.0 ** -0.5, rel=1e-15)


def test_link_validation():
    with pytest.raises(DomainError):
        LinkParams(l_ac_km=-1.0, l_bc_km=0.0)
    with pytest.raises(DomainError):
        LinkParams(l_ac_km=1.0, l_bc_km=0.0, eps_a=-0.1)
    with pytest.raises(DomainError):
        LinkParams(l_ac_km=1.0, l_bc_km=0.0, loss_db_per_km=0.0)


# --- optimal displacement gain -------------------------------------------------


def test_optimal_mu_plain_source():
    # sqrt(2 * 39 / 41) for an unmodified V = 40 source and a lossless Bob link.
    mu = optimal_mu(plain(), link(l_bc=0.0))
    assert mu == pytest.approx(1.3792893185949944, rel=1e-12)


def test_optimal_mu_scales_with_bob_loss():
    # T_B = 0.5 doubles mu^2.
    lk = LinkParams(l_ac_km=10.0, l_bc_km=math.log10(2.0) * 50.0)
    assert lk.t_b == pytest.approx(0.5, rel=1e-12)
    mu = optimal_mu(plain(), lk)
    assert mu == pytest.approx(1.9506096607933858, rel=1e-10)
    assert mu == pytest.approx(optimal_mu(plain(), link(l_bc=0.0)) * math.sqrt(2.0), rel=1e-10)


def test_optimal_mu_vacuum_limit():
    assert optimal_mu(SourceParams(v=1.0 + 1e-12), link()) < 1e-5


def test_degenerate_source_raises():
    with pytest.raises(DegenerateSource):
        _optimal_mu_from_entries(v_b2=5.0, v_b5=1.0, t_b=1.0)


def test_degenerate_geometry_raises():
    with pytest.raises(DegenerateGeometry):
        _optimal_mu_from_entries(v_b2=5.0, v_b5=5.0, t_b=0.0)
    with pytest.raises(DegenerateGeometry):
        equivalent_channel(plain(), LinkParams(l_ac_km=1e6, l_bc_km=0.0))


# --- equivalent channel --------------------------------------------------------


def test_excess_noise_ten_km_asymmetric():
    # eps_a + eps_b / t_a at t_b = 1: 0.002 + 0.002 * 10^0.2.
    chan = equivalent_channel(plain(), link())
    assert chan.eps_eq == pytest.approx(0.005169786384922227, rel=1e-12)
    assert chan.t_eq == pytest.approx(10.0 ** -0.2 * 39.0 / 41.0, rel=1e-12)


def test_excess_noise_lossless_noiseless_is_zero():
    chan = equivalent_channel(plain(), link(l_ac=0.0, l_bc=0.0, eps=0.0))
    assert chan.eps_eq == pytest.approx(0.0, abs=1e-12)


def test_general_path_matches_closed_form_at_optimal_mu():
    rng = random.Random(20240917)
    for _ in range(50):
        src_b = SourceParams(
            v=rng.uniform(1.5, 100.0),
            k=rng.randrange(0, 4),
            t_ps=rng.uniform(0.1, 1.0),
        )
        lk = LinkParams(
            l_ac_km=rng.uniform(0.0, 120.0),
            l_bc_km=rng.uniform(0.0, 60.0),
            eps_a=rng.uniform(0.0, 0.2),
            eps_b=rng.uniform(0.0, 0.2),
        )
        chan = equivalent_channel(src_b, lk)
        assert chan.eps_eq == pytest.approx(minimal_excess_noise(lk), rel=1e-12, abs=1e-12)


@settings(max_examples=100)
@given(scale=st.floats(0.2, 5.0))
def test_optimal_mu_minimises_excess_noise(scale):
    src_b = SourceParams(40.0, 1, 0.8)
    lk = link(l_ac=30.0, l_bc=5.0)
    mu_opt = optimal_mu(src_b, lk)
    detuned = equivalent_channel(src_b, lk, mu=mu_opt * scale)
    optimal = equivalent_channel(src_b, lk)
    assert detuned.eps_eq >= optimal.eps_eq - 1e-12


def test_bob_subtraction_shrinks_effective_transmittance():
    lk = link()
    t_plain = equivalent_channel(plain(), lk).t_eq
    for t_ps in (0.5, 0.8, 0.95):
        t_sub = equivalent_channel(SourceParams(40.0, 1, t_ps), lk).t_eq
        assert t_sub < t_plain


def test_excess_noise_decreases_with_bob_transmittance():
    # Moving the relay towards Bob (larger T_B) can only help.
    values = [
        minimal_excess_noise(link(l_ac=30.0, l_bc=l_bc)) for l_bc in (40.0, 20.0, 10.0, 0.0)
    ]
    assert all(later <= earlier for earlier, later in zip(values, values[1:]))


# --- correlated attacks ---------------------------------------------------------


def test_independent_attack_has_no_correlation_term():
    assert eve_correlation_noise(link(l_ac=30.0, l_bc=30.0), AttackModel()) == 0.0


def test_correlation_term_is_negative_for_lossy_links():
    c_e = eve_correlation_noise(link(l_ac=30.0, l_bc=30.0), NEG_EPR)
    assert c_e < 0.0


def test_correlated_attack_adds_noise():
    lk = LinkParams(l_ac_km=2.0, l_bc_km=2.0)
    eps_ind = equivalent_channel(plain(1e4), lk).eps_eq
    eps_neg = equivalent_channel(plain(1e4), lk, NEG_EPR).eps_eq
    assert eps_neg > eps_ind


def test_correlated_attack_degenerates_without_bob_loss():
    # Extreme asymmetric layout: no loss port on Bob's link, so the
    # correlated attack coincides with two independent ones.
    lk = link(l_ac=25.0, l_bc=0.0)
    assert eve_correlation_noise(lk, NEG_EPR) == 0.0
    eps_ind = equivalent_channel(plain(), lk).eps_eq
    eps_neg = equivalent_channel(plain(), lk, NEG_EPR).eps_eq
    assert eps_neg == pytest.approx(eps_ind, abs=1e-9)


def test_ce_convention_flag():
    lk = LinkParams(l_ac_km=10.0, l_bc_km=10.0)
    printed = eve_correlation_noise(lk, NEG_EPR)
    single = eve_correlation_noise(lk, AttackModel(AttackKind.NEGATIVE_EPR, CE_SINGLE_FACTOR))
    assert single == pytest.approx(printed * lk.t_a, rel=1e-12)


def test_symmetric_correlation_magnitude():
    # W_A = W_B = W makes the cross term -sqrt(W^2 - 1), i.e. the maximal
    # anticorrelation of a two-mode squeezed ancilla of variance W.
    lk = LinkParams(l_ac_km=5.0, l_bc_km=5.0, eps_a=0.01, eps_b=0.01)
    t = lk.t_a
    w = 1.0 + t * 0.01 / (1.0 - t)
    expected = (2.0 / t) * (1.0 - t) * -math.sqrt(w * w - 1.0)
    assert eve_correlation_noise(lk, NEG_EPR) == pytest.approx(expected, rel=1e-12)


# --- end-to-end covariance -------------------------------------------------------


def test_identity_channel_preserves_source():
    chan = EquivalentChannel(t_eq=1.0, eps_eq=0.0, mu=math.sqrt(2.0))
    cov = end_to_end_covariance(plain(), chan)
    assert cov.a == pytest.approx(40.0, rel=1e-15)
    assert cov.b == pytest.approx(40.0, rel=1e-15)
    assert cov.c == pytest.approx(math.sqrt(1599.0), rel=1e-15)


def test_half_transmittance_channel():
    chan = EquivalentChannel(t_eq=0.5, eps_eq=0.0, mu=1.0)
    cov = end_to_end_covariance(plain(), chan)
    assert cov.a == pytest.approx(40.0, rel=1e-15)
    assert cov.b == pytest.approx(20.5, rel=1e-15)
    assert cov.c == pytest.approx(math.sqrt(1599.0 * 0.5), rel=1e-14)


def test_channel_composition_arithmetic():
    src = SourceParams(40.0, 1, 0.9)
    base = subtracted_covariance(src)
    chan = EquivalentChannel(t_eq=0.1, eps_eq=0.01, mu=1.0)
    cov = end_to_end_covariance(src, chan)
    assert cov.a == base.a
    assert cov.c == pytest.approx(math.sqrt(0.1) * base.c, rel=1e-14)
    assert cov.b == pytest.approx(0.1 * (base.b - 1.0) + 1.0 + 0.1 * 0.01, rel=1e-14)


def test_zero_transmittance_channel_rejected():
    with pytest.raises(DegenerateGeometry):
        end_to_end_covariance(plain(), EquivalentChannel(t_eq=0.0, eps_eq=0.0, mu=1.0))
