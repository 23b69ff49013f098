import math
import threading

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ogm_lab.errors import DomainError, ScheduleInvalidError, UsageError
from ogm_lab.schedules import (
    CouplingSchedule,
    PhiSchedule,
    ThetaSchedule,
    audit_theta,
    clear_caches,
    coupling_from_theta,
    estimate_zeta,
    gamma_sc,
    phi_exact,
    phi_simple,
    theta_exact,
    theta_simple,
    tilde_coupling,
)

mpmath.mp.dps = 50


def mp_theta(n):
    th = [mpmath.mpf(1)]
    for _ in range(n):
        th.append((1 + mpmath.sqrt(1 + 4 * th[-1] ** 2)) / 2)
    return th


def test_theta_exact_values():
    ref = mp_theta(3)
    assert theta_exact(-1) == 0.0
    assert theta_exact(0) == 1.0
    assert theta_exact(1) == pytest.approx((1 + math.sqrt(5)) / 2, rel=1e-15)
    # high-precision replay: 2.19352708533105...
    assert theta_exact(2) == pytest.approx(float(ref[2]), rel=1e-15)
    assert abs(theta_exact(2) - 2.1935270853310) < 1e-12


def test_theta_exact_long_range_against_mpmath():
    ref = mp_theta(2000)
    vals = ThetaSchedule.exact().values(2000)
    err = max(abs(vals[k] - float(ref[k])) / float(ref[k]) for k in range(0, 2001, 37))
    assert err < 1e-14


def test_theta_recurrence_residual_to_1e6():
    th = ThetaSchedule.exact().values(10**6)
    r = (th[1:] ** 2 - th[1:] - th[:-1] ** 2) / th[:-1] ** 2
    assert np.max(np.abs(r)) < 1e-13


def test_theta_simple_values():
    assert theta_simple(0) == 1.0
    assert theta_simple(1) == 1.5
    assert theta_simple(4) == 3.0


@given(st.integers(min_value=0, max_value=10**6))
def test_theta_simple_relaxed_requirement(k):
    a, b = theta_simple(k), theta_simple(k + 1)
    assert 0.0 <= b * b - b <= a * a


def test_phi_values():
    assert phi_exact(0) == 1.0
    assert phi_exact(1) == 2.0
    t1 = mp_theta(1)[1]
    assert phi_exact(2) == pytest.approx(float((1 + mpmath.sqrt(1 + 8 * t1 ** 2)) / 2), rel=1e-15)
    assert abs(phi_exact(2) - 2.8422357) < 1e-7
    assert phi_simple(1) == pytest.approx((2 + 1 / math.sqrt(2)) / math.sqrt(2), rel=1e-15)
    assert phi_simple(1) == pytest.approx(1.9142, abs=1e-4)
    assert phi_simple(9) == pytest.approx(7.5711, abs=1e-4)
    p = phi_simple(1)
    assert p * p - p == pytest.approx(1.75, abs=0.01)
    with pytest.raises(UsageError):
        phi_simple(0)


def test_phi_validation():
    PhiSchedule("exact", ThetaSchedule.exact()).validate(1000)
    PhiSchedule("simple", ThetaSchedule.simple()).validate(1000)


def test_gamma_examples():
    g = gamma_sc(2.0)
    assert g.gamma == pytest.approx((math.sqrt(17) + 3) / 2, rel=1e-14)
    assert g.gamma == pytest.approx(4 / (math.sqrt(17) - 3), rel=1e-14)
    assert g.gamma == pytest.approx(3.56155, abs=1e-5)
    big = gamma_sc(1e6)
    assert abs(big.momentum - (1 - 2 * math.sqrt(2) / 1e3)) <= 1e-5
    for bad in (1.0, 1.0 + 1e-10, 0.5, math.inf):
        with pytest.raises(DomainError):
            gamma_sc(bad)


@given(st.floats(min_value=1.001, max_value=1e8))
def test_gamma_identities(kappa):
    g = gamma_sc(kappa).gamma
    mu, L = 1.0, kappa
    q = lambda v: mpmath.mpf(v)
    # (kappa-1) g^2 - 3 g - 2 = 0
    assert abs((q(kappa) - 1) * q(g) ** 2 - 3 * q(g) - 2) <= 1e-12 * (q(kappa) * q(g) ** 2)
    assert mu * (2 + g) / (L * g * g) == pytest.approx(1 / (1 + g), rel=1e-12)
    assert L * g * g / (2 * (1 + g) * (2 + g)) == pytest.approx(mu / 2, rel=1e-12)
    # mirror-descent form condition (2+g)/(2L) = g^2/(2(1+g) mu)
    assert (2 + g) / (2 * L) == pytest.approx(g * g / (2 * (1 + g) * mu), rel=1e-12)


def test_lc_coupling_cancels_cross_term():
    # with r = (1 - tau)/tau the <grad f(x_k), y_k - x_k> coefficients are
    # r gamma - 1 and gamma * gamma/(1 + gamma) * r; they must agree
    for kappa in (2.0, 10.0, 1e4):
        g = gamma_sc(kappa)
        G = g.gamma
        r = (1 - g.lc_tau) / g.lc_tau
        assert r * G - 1 == pytest.approx(G * G / (1 + G) * r, rel=1e-12)
    assert gamma_sc(6.0).gamma == pytest.approx(1.0)
    assert gamma_sc(6.0).lc_tau == pytest.approx(1 / 3)


def test_rate_exponent_large_kappa():
    g = gamma_sc(1e4).gamma
    assert math.log1p(g) == pytest.approx(math.sqrt(2) / 100, rel=0.02)


def test_coupling_schedules():
    th = ThetaSchedule.exact()
    c = coupling_from_theta(th, 1.0, "ogm")
    assert c.alpha(1) == 2.0
    assert c.tau(0) == 1.0
    assert c.tau(1) == pytest.approx(0.6180339887, abs=1e-10)
    a = coupling_from_theta(th, 1.0, "agm")
    assert [a.tau(k) for k in range(20)] == [c.tau(k) for k in range(20)]
    assert a.alpha(5) == pytest.approx(c.alpha(5) / 2)
    c.validate(1000)
    t = tilde_coupling(th, PhiSchedule("exact", th), 1.0)
    assert t.tilde_alpha(1) == 1.0
    assert t.tilde_alpha(2) == 2.0
    assert t.tilde_tau(0) == 1.0
    assert all(0.0 < t.tilde_tau(k) <= 1.0 for k in range(200))
    t.validate(1000)


def test_custom_schedule_invalid_index():
    vals = [1.0, 1.6180339887498949, 2.1935270853310538, 10.0, 12.0]
    with pytest.raises(ScheduleInvalidError) as info:
        ThetaSchedule.custom(values=vals).validate(4)
    assert info.value.k == 3
    with pytest.raises(ScheduleInvalidError):
        coupling_from_theta(ThetaSchedule.custom(values=vals), 1.0).validate(4)
    ThetaSchedule.custom(values=vals, check=False)  # accepted without checking


def test_theta_threaded_extension_consistent():
    clear_caches()
    out = {}

    def work(i):
        out[i] = ThetaSchedule.exact().values(5000 + 1000 * i)[:5000].copy()

    ts = [threading.Thread(target=work, args=(i,)) for i in range(6)]
    for t in ts:
        t.start()
    for t in ts:
        t.join()
    ref = out[0]
    assert all(np.array_equal(ref, v) for v in out.values())


def test_estimate_zeta():
    z, res = estimate_zeta(10**6)
    assert abs(z - 0.646) < 1e-2
    assert 0.636 <= z <= 0.656
    z4, _ = estimate_zeta(10**4)
    z5, _ = estimate_zeta(10**5)
    assert abs(z - z5) < abs(z5 - z4)
    with pytest.raises(UsageError):
        estimate_zeta(50)


def test_zeta_matches_mpmath_replay():
    # independent replay of the recurrence at 40 digits
    mpmath.mp.dps = 40
    th = mpmath.mpf(1)
    K = 20000
    for _ in range(K):
        th = (1 + mpmath.sqrt(1 + 4 * th * th)) / 2
    ref = 2 * th - K - 1 - mpmath.log(K) / 2
    mpmath.mp.dps = 50
    z, _ = estimate_zeta(K)
    assert z == pytest.approx(float(ref), abs=1e-11)


def test_audit_claims():
    a = audit_theta(10**5)
    assert 0.636 <= a.zeta <= 0.656
    assert a.e_decreasing and a.decrement_bound_ok
    # c_k crosses 1/4 at k = 2 only
    assert a.c_first_violation == 2
    assert a.c_max_from3 < 0.25
    th2 = float(mp_theta(2)[2])
    assert a.c_max == pytest.approx((th2 - 2.0) / math.log(2), rel=1e-12)
