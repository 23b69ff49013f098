import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import diag_quadratic
from ogm_lab.certificates import (
    CertificateReport,
    active_tolerances,
    bound_agm,
    bound_lc,
    bound_ogm_primary,
    bound_ogm_secondary,
    bound_sc_ogm,
    certify,
    check_cocoercivity_chain,
    gap_term,
    lc_step_rhs,
    lyapunov_agm,
    lyapunov_lc,
    lyapunov_ogm,
    lyapunov_ogm_tilde,
    lyapunov_sc_ogm,
    lyapunov_sc_ogm_tilde,
    report_agm,
    report_lc,
    report_ogm,
    report_ogm_tilde,
    report_sc_ogm,
    report_sc_ogm_tilde,
    tolerance,
    tolerance_overrides,
)
from ogm_lab.errors import CertificateUnavailableError, UsageError
from ogm_lab.methods import ALGORITHMS, make_config, run
from ogm_lab.numkit import BregmanGenerator, QuadraticNorm
from ogm_lab.problems import (
    ProblemSpec,
    logistic_oracle,
    make_problem,
    quadratic_oracle,
    refine_reference,
)
from ogm_lab.schedules import (
    CouplingSchedule,
    PhiSchedule,
    ThetaSchedule,
    gamma_sc,
)

TH = ThetaSchedule.exact()
X0 = [1.0, 1.0]


def trace_of(alg, o, iters=100, x0=X0, **kw):
    return run(make_config(alg, o, **kw), o, x0, iters)


def test_bound_examples():
    assert bound_ogm_primary(1, TH, 1.0, 1.0) == 0.25
    S = ThetaSchedule.simple()
    for k in (1, 2, 7, 100):
        assert bound_ogm_primary(k, S, 2.0, 3.0) == pytest.approx(6.0 / (k + 1) ** 2, rel=1e-15)
        assert bound_agm(k, TH, 2.0, 3.0) == pytest.approx(2 * bound_ogm_primary(k, TH, 2.0, 3.0), rel=1e-15)
    with pytest.raises(UsageError):
        bound_ogm_primary(0, TH, 1.0, 1.0)
    phi = PhiSchedule("exact", TH)
    assert bound_ogm_secondary(0, phi, 2.0, 1.0) == 1.0
    assert bound_ogm_secondary(1, phi, 1.0, 1.0) == 0.125
    simple = PhiSchedule("simple", S)
    assert bound_ogm_secondary(9, simple, 1.0, 1.0) == pytest.approx(1 / (10 + 1 / math.sqrt(2)) ** 2)


def test_sc_bound_examples():
    g = gamma_sc(2.0)
    y1, _ = bound_sc_ogm(1, g, 1.0, 2.0, 3.0)
    assert y1 == pytest.approx(2.5 * 3.0)
    y10, _ = bound_sc_ogm(10, g, 1.0, 2.0, 3.0)
    assert y10 == pytest.approx((1 + 3.56155) ** -9 * 2.5 * 3.0, rel=1e-5)


def test_lc_bound_examples():
    c = CouplingSchedule(TH, 1.0, "ogm")
    B = BregmanGenerator(QuadraticNorm.identity(2), 1.0)
    R2 = 3.0
    V0 = 0.5 * R2
    for k in (1, 5, 40):
        assert bound_lc(k, c, 1.0, V0) == pytest.approx(bound_ogm_primary(k, TH, 1.0, R2), rel=1e-14)
        Vh = R2  # t = 1/2
        assert bound_lc(k, c, 1.0, Vh) == pytest.approx(bound_agm(k, TH, 1.0, R2), rel=1e-14)
    c2 = CouplingSchedule(TH, 2.0, "ogm")
    assert bound_lc(1, c2, 2.0, 1.5) == pytest.approx(1.5 * 2.0 / 2)
    assert B.t == 1.0


@given(st.integers(1, 10**5), st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
def test_factor_two_identity(k, L, R2):
    for th in (TH, ThetaSchedule.simple()):
        assert bound_agm(k, th, L, R2) / bound_ogm_primary(k, th, L, R2) == pytest.approx(2.0, rel=1e-14)


def test_agm_lyapunov():
    o = diag_quadratic([1.0, 10.0], b=[1.0, -2.0])
    tr = trace_of("agm", o)
    xs = o.reference.x
    assert lyapunov_agm(tr, o, k=0) == pytest.approx(0.5 * o.L * np.sum((tr.x[0] - xs) ** 2), rel=1e-14)
    U = [lyapunov_agm(tr, o, k=k) for k in range(101)]
    rep = report_agm(tr, o)
    np.testing.assert_allclose(rep.lyap, U, rtol=1e-12)
    assert not rep.lyap_violated.any() and not rep.violated.any()


def test_lyapunov_zero_at_optimum():
    o = diag_quadratic([1.0, 2.0])
    xs = np.array(o.reference.x)
    for alg in ("agm", "ogm_z"):
        tr = trace_of(alg, o, 20, x0=xs, last_step=True)
        f = lyapunov_agm if alg == "agm" else lyapunov_ogm
        assert all(abs(f(tr, o, k=k)) == 0.0 for k in range(0, 21))
        phi = tr.config.phi
        assert all(abs(lyapunov_ogm_tilde(tr, o, phi, k)) == 0.0 for k in range(21))
    tr = trace_of("sc_ogm", o, 20, x0=xs)
    assert all(abs(lyapunov_sc_ogm(tr, o, k=k)) == 0.0 for k in range(21))
    assert all(abs(lyapunov_sc_ogm_tilde(tr, o, k=k)) == 0.0 for k in range(1, 21))
    tr = trace_of("lc", o, 20, x0=xs, t=0.5)
    c, B = tr.config.coupling, tr.config.bregman
    assert all(abs(lyapunov_lc(tr, o, c, B, k)) == 0.0 for k in range(21))


def test_ogm_lyapunov_chain():
    o = diag_quadratic([1.0, 10.0], b=[1.0, -2.0])
    tr = trace_of("ogm", o, last_step=True)
    R2 = float(np.sum((tr.x[0] - o.reference.x) ** 2))
    assert lyapunov_ogm(tr, o, k=-1) == pytest.approx(0.5 * o.L * R2)
    rep = report_ogm(tr, o)
    assert rep.extras["U_init"] == pytest.approx(0.5 * o.L * R2)
    assert not rep.lyap_violated.any()
    np.testing.assert_allclose(rep.lyap[:5], [lyapunov_ogm(tr, o, k=k) for k in range(5)], rtol=1e-12)
    # tilde at k = 0 from its closed form
    phi = tr.config.phi
    x0 = tr.x[0]
    g0 = o.grad(x0)
    U0t = o.gap(x0) + 0.5 * o.L * np.sum((x0 - g0 / o.L - o.reference.x) ** 2)
    assert lyapunov_ogm_tilde(tr, o, phi, 0) == pytest.approx(U0t, rel=1e-13)
    assert U0t <= 0.5 * o.L * R2
    chain = report_ogm_tilde(tr, o)
    assert not chain.lyap_violated.any() and not chain.violated.any()


def test_sc_ogm_lyapunov():
    o = diag_quadratic([1.0, 2.0], b=[1.0, -1.0])
    tr = trace_of("sc_ogm", o, 40)
    rep = report_sc_ogm(tr, o)
    assert not rep.any_violation
    g = gamma_sc(o.kappa).gamma
    assert rep.lyap[3] * (1 + g) ** 3 == pytest.approx(lyapunov_sc_ogm(tr, o, k=3), rel=1e-12)
    tilde = report_sc_ogm_tilde(tr, o)
    assert not tilde.any_violation
    assert tilde.lyap[4] * (1 + g) ** 3 == pytest.approx(lyapunov_sc_ogm_tilde(tr, o, k=4), rel=1e-12)


def test_sc_ogm_initial_value_on_seeded_instances():
    for seed in range(20):
        o = make_problem(ProblemSpec("quadratic", dim=2 + seed % 7, seed=seed, kappa=5.0 + seed))
        x0 = np.random.default_rng(seed).standard_normal(o.dim)
        tr = trace_of("sc_ogm", o, 3, x0=x0)
        R2 = o.norm.primal(x0 - o.reference.x) ** 2
        assert lyapunov_sc_ogm(tr, o, k=0) <= 0.5 * (o.mu + 2 * o.L) * R2 * (1 + 1e-12)


def test_sc_chain_on_ridge_logistic():
    rng = np.random.default_rng(2)
    A = rng.standard_normal((30, 3))
    lab = np.sign(A @ np.array([1.0, -1.0, 0.5]) + 0.5 * rng.standard_normal(30))
    base = np.linalg.norm(A, 2) ** 2 / (4 * 30)
    o = refine_reference(logistic_oracle(lab, A, lam=base / 9.0))
    assert o.kappa == pytest.approx(10.0, rel=1e-12)
    tr = trace_of("sc_ogm", o, 40, x0=np.ones(3))
    rep = report_sc_ogm_tilde(tr, o)
    assert not rep.any_violation


def test_lc_per_step_inequality():
    Q = QuadraticNorm.diagonal([1.0, 4.0])
    o = diag_quadratic([2.0, 5.0], b=[1.0, 3.0], Q=Q)
    tr = trace_of("lc", o, 60, t=1.0)
    c, B = tr.config.coupling, tr.config.bregman
    # k = 0: coefficient of h(x_{-1}) vanishes
    assert lc_step_rhs(tr, o, c, B, 0) == pytest.approx(B.divergence(tr.z[0], o.reference.x), rel=1e-14)
    rep = report_lc(tr, o, c, B)
    assert not rep.any_violation
    for k in range(60):
        assert lyapunov_lc(tr, o, c, B, k) <= lc_step_rhs(tr, o, c, B, k) + rep.tol_lyap[k]


def test_cocoercivity_examples():
    o = diag_quadratic([3.0, 3.0], b=[1.0, 0.0])
    tr = trace_of("ogm", o, 30)
    rep = check_cocoercivity_chain(tr, o)
    assert np.nanmax(np.abs(rep.gap)) <= 1e-13
    o2 = diag_quadratic([1.0, 10.0], b=[1.0, 1.0])
    rep2 = check_cocoercivity_chain(trace_of("ogm", o2, 100), o2)
    assert rep2.extras["min_normalized_slack"] >= -1e-9
    assert not rep2.violated.any()
    x = np.array([0.3, 0.4])
    g = o2.grad(x)
    assert o2.f(x) - o2.f(x) - g @ (x - x) - o2.norm.dual(g - g) ** 2 / (2 * o2.L) == 0.0


def test_gap_term_nonnegative():
    o = make_problem(ProblemSpec("log_sum_exp", dim=4, seed=3))
    rng = np.random.default_rng(0)
    for _ in range(100):
        assert gap_term(o, rng.standard_normal(4)) >= -1e-12


SC_METHODS = ("sc_agm", "sc_ogm", "lc_sc_ogm")
CASES = [("quadratic", a) for a in ALGORITHMS] + [("log_sum_exp", a) for a in ALGORITHMS if a not in SC_METHODS]


@pytest.mark.parametrize("kind,alg", CASES)
def test_every_certificate_holds(kind, alg):
    sc = alg in SC_METHODS
    for seed in range(20 if kind == "quadratic" else 5):
        if kind == "quadratic":
            spec = ProblemSpec(kind, dim=2 + seed % 6, seed=seed, kappa=[10.0, 1e3][seed % 2] if not sc else 20.0)
            norm = QuadraticNorm.diagonal(np.linspace(1, 3, spec.dim)) if seed % 3 == 0 else None
        else:
            spec = ProblemSpec(kind, dim=3, seed=seed)
            norm = None
        o = make_problem(spec, norm)
        tr = run(make_config(alg, o, t=0.75, last_step=not sc), o, np.zeros(o.dim), 80)
        reps = certify(tr, o)
        for name, rep in reps.items():
            assert not rep.any_violation, (seed, name, rep.first_violation)


def test_doubling_theta_breaks_the_bound():
    o = make_problem(ProblemSpec("quadratic", dim=6, seed=1, kappa=100.0))
    bad = ThetaSchedule.custom(func=lambda k: 2.0 ** k, check=False)
    tr = run(make_config("ogm", o, theta=bad), o, np.zeros(6), 50)
    assert report_ogm(tr, o).violated.any()


def test_missing_reference():
    o = diag_quadratic([1.0, 2.0]).with_reference(None)
    tr = run(make_config("ogm", o), o, X0, 5)
    with pytest.raises(CertificateUnavailableError):
        certify(tr, o)
    with pytest.raises(CertificateUnavailableError):
        lyapunov_ogm(tr, o, k=0)


def test_tolerance_model_and_overrides():
    assert tolerance(0, 0.0) == pytest.approx(1e-9)
    assert tolerance(10, 2.0) == pytest.approx(1e-9 * 3 + 10 * 1e-12 * 2)
    with tolerance_overrides(base=1e-6) as t:
        assert t.base == 1e-6 and tolerance(0, 0.0) == pytest.approx(1e-6)
    assert active_tolerances().base == 1e-9
    with pytest.raises(UsageError):
        with tolerance_overrides(bogus=1.0):
            pass


def test_report_flags():
    n = 4
    rep = CertificateReport("demo", np.arange(n), np.zeros(n), np.array([np.nan, 0.0, 2e-9, 0.0]),
                            np.array([np.nan, 1.0, 1.0, 1.0]), np.array([0.0, 0.5, 1.0 + 5e-10, 1.2]),
                            np.full(n, 1e-9), np.full(n, 1e-9))
    assert rep.violated.tolist() == [False, False, False, True]
    assert rep.lyap_violated.tolist() == [False, False, True, False]
    assert rep.first_violation == 2
    cols = rep.columns()
    assert list(cols)[:7] == ["k", "lyap", "dlyap", "bound", "gap", "slack", "violated"]
