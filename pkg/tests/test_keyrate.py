import math

import pytest

from cvmdi_ps import (
    AttackKind,
    AttackModel,
    DomainError,
    LinkParams,
    SourceParams,
    TwoModeCovariance,
    holevo_bound,
    key_rate,
    mutual_information,
    plob_bound,
    tmsv_covariance,
)


def plain(v=40.0):
    return SourceParams(v=v)


def asym_link(l_ac, eps=0.002):
    return LinkParams(l_ac_km=l_ac, l_bc_km=0.0, eps_a=eps, eps_b=eps)


# --- mutual information --------------------------------------------------------


def test_mutual_information_vanishes_without_correlation():
    assert mutual_information(TwoModeCovariance(40.0, 40.0, 0.0)) == 0.0


def test_mutual_information_identity_channel():
    # log2(41/2): conditioning one arm of the TMSV leaves variance 1.
    assert mutual_information(tmsv_covariance(40.0)) == pytest.approx(
        4.357552004618084, rel=1e-12
    )


def test_mutual_information_half_loss_oracle():
    gamma = TwoModeCovariance(40.0, 20.5, math.sqrt(799.5))
    assert mutual_information(gamma) == pytest.approx(3.426264754702098, rel=1e-12)


# --- Holevo bound ----------------------------------------------------------------


def test_holevo_pure_lossless_is_zero():
    assert holevo_bound(tmsv_covariance(40.0)) == pytest.approx(0.0, abs=1e-9)


def test_holevo_half_loss_oracle():
    gamma = TwoModeCovariance(40.0, 20.5, math.sqrt(799.5))
    assert holevo_bound(gamma) == pytest.approx(2.895972307260051, rel=1e-12)


def test_holevo_uncorrelated_thermal():
    # c = 0 leaves the conditioned mode untouched: chi = 2 G(3) - G(3) = G(3).
    assert holevo_bound(TwoModeCovariance(3.0, 3.0, 0.0)) == pytest.approx(2.0, rel=1e-12)


def test_holevo_never_negative():
    for a, b, frac in [(2.0, 2.0, 0.9), (40.0, 5.0, 0.5), (100.0, 80.0, 0.99)]:
        c = frac * math.sqrt(a * b - 1.0 - abs(a - b))
        assert holevo_bound(TwoModeCovariance(a, b, c)) >= 0.0


# --- composed key rate ------------------------------------------------------------


def test_zero_distance_noiseless_rate():
    # Even with lossless noiseless links the relay reduction leaves a
    # pure-loss effective channel (t_eq = lambda^2 < 1), so Eve still
    # holds a purification: chi > 0, but the rate is comfortably positive.
    result = key_rate(plain(), plain(), asym_link(0.0, eps=0.0), beta=1.0)
    assert result.p_success == 1.0
    assert result.chi_be > 0.0
    assert not result.insecure
    assert result.key_rate == pytest.approx(result.i_ab - result.chi_be, rel=1e-12)
    assert result.key_rate > 2.0


def test_breakdown_invariant():
    for l_ac in (0.0, 10.0, 30.0, 50.0):
        r = key_rate(plain(), plain(), asym_link(l_ac))
        assert r.key_rate == max(0.0, r.raw_rate)
        assert r.raw_rate == pytest.approx(
            r.p_success * (r.beta * r.i_ab - r.chi_be), rel=1e-12, abs=1e-15
        )


def test_insecure_flag_beyond_range():
    r = key_rate(plain(), plain(), asym_link(60.0))
    assert r.insecure
    assert r.key_rate == 0.0
    assert r.raw_rate < 0.0


def test_subtracting_source_multiplies_success_probability():
    src_a = SourceParams(40.0, 1, 0.9)
    r = key_rate(src_a, plain(), asym_link(10.0))
    assert r.p_success == pytest.approx(0.2240735421, rel=1e-9)


def test_bob_subtraction_only_hurts():
    for l_ac in (0.0, 10.0, 30.0):
        baseline = key_rate(plain(), plain(), asym_link(l_ac))
        degraded = key_rate(plain(), SourceParams(40.0, 1, 0.9), asym_link(l_ac))
        assert degraded.key_rate < baseline.key_rate


def test_rate_monotone_in_noise_and_distance():
    rates_eps = [
        key_rate(plain(), plain(), asym_link(20.0, eps=e)).key_rate
        for e in (0.0, 0.002, 0.01, 0.02)
    ]
    assert all(b <= a for a, b in zip(rates_eps, rates_eps[1:]))
    rates_d = [
        key_rate(plain(), plain(), asym_link(d)).key_rate for d in (0.0, 10.0, 20.0, 40.0)
    ]
    assert all(b <= a for a, b in zip(rates_d, rates_d[1:]))


def test_rate_monotone_in_beta():
    rates = [
        key_rate(plain(), plain(), asym_link(20.0), beta=beta).key_rate
        for beta in (0.8, 0.9, 0.95, 1.0)
    ]
    assert all(b >= a for a, b in zip(rates, rates[1:]))


def test_correlated_attack_never_beats_independent():
    neg = AttackModel(kind=AttackKind.NEGATIVE_EPR)
    for total in (0.5, 2.0, 4.0):
        lk = LinkParams(l_ac_km=total / 2.0, l_bc_km=total / 2.0)
        r_ind = key_rate(plain(1e4), plain(1e4), lk)
        r_neg = key_rate(plain(1e4), plain(1e4), lk, neg)
        assert r_neg.key_rate <= r_ind.key_rate + 1e-9


def test_beta_validation():
    with pytest.raises(DomainError):
        key_rate(plain(), plain(), asym_link(1.0), beta=1.5)


# --- PLOB bound --------------------------------------------------------------------


def test_plob_half():
    assert plob_bound(0.5) == pytest.approx(1.0, rel=1e-15)


def test_plob_hundred_km():
    assert plob_bound(10.0 ** -2.0) == pytest.approx(0.014499569695115077, rel=1e-12)


def test_plob_small_transmittance_limit():
    t = 1e-9
    assert plob_bound(t) == pytest.approx(t / math.log(2.0), rel=1e-6)


@pytest.mark.parametrize("t", [0.0, 1.0, -0.1, 1.5])
def test_plob_domain(t):
    with pytest.raises(DomainError):
        plob_bound(t)


def test_rate_below_plob():
    for l_ac in (5.0, 15.0, 30.0, 40.0):
        r = key_rate(plain(), plain(), asym_link(l_ac))
        assert r.key_rate <= plob_bound(10.0 ** (-0.2 * l_ac / 10.0))
