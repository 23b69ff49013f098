"""Lyapunov values, rate bounds and inequality audits along a trace.

Tolerance model
---------------
Every check at row ``k`` allows

    tol_k = 1e-9 (1 + |U_0|) + k 1e-12 |U_0| + (weighted reference error)

where ``U_0`` is the initial Lyapunov value. The reference error is zero for
closed-form references. For refined references (and for objectives without a
cancellation-free ``f - f_star``) it combines

* ``eps_f``: the uncertainty of a measured gap ``f(x) - f_ref``, namely
  ``residual * radius`` plus evaluation roundoff, multiplied by the weight the
  Lyapunov function puts on function gaps (``2 theta_k^2`` for OGM, ...);
* ``eps_d``: the uncertainty of squared distances to ``x_ref``.

Linearly convergent certificates (SC-AGM, SC-OGM and its mirror-descent
form) are reported in rate-normalized units: ``lyap`` holds
``W_k = U_k / rate^k``, so contraction reads ``W_k <= W_{k-1} / rate`` and no
value overflows. Those checks use a relative tolerance ``1e-9 W_{k-1}`` and
stop once the Lyapunov value reaches ``1e-12`` of the initial scale, below
which double precision cannot resolve it.
"""
from __future__ import annotations

import contextlib
import contextvars
import dataclasses
import math
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from .errors import CertificateUnavailableError, UsageError
from .methods import Trace, sc_ogm_z
from .numkit import BregmanGenerator
from .problems import ObjectiveOracle
from .schedules import (
    CouplingSchedule,
    PhiSchedule,
    ScGamma,
    ThetaSchedule,
    gamma_sc,
)

EVAL_ULPS = 64.0 * np.finfo(float).eps


@dataclass(frozen=True)
class Tolerances:
    """Constants of the tolerance model (see module docstring)."""

    base: float = 1e-9
    drift: float = 1e-12
    relative: float = 1e-9
    floor: float = 1e-12
    cocoercivity: float = 1e-8


_ACTIVE = contextvars.ContextVar("ogm_lab_tolerances", default=Tolerances())


def active_tolerances() -> Tolerances:
    return _ACTIVE.get()


@contextlib.contextmanager
def tolerance_overrides(**changes):
    """Temporarily replace tolerance constants in the current context."""
    unknown = set(changes) - {f.name for f in dataclasses.fields(Tolerances)}
    if unknown:
        raise UsageError(f"unknown tolerance keys: {sorted(unknown)}")
    token = _ACTIVE.set(dataclasses.replace(_ACTIVE.get(), **changes))
    try:
        yield _ACTIVE.get()
    finally:
        _ACTIVE.reset(token)


def tolerance(k, U0, weighted_error=0.0):
    """``base (1 + |U0|) + k drift |U0| + weighted_error``."""
    t = _ACTIVE.get()
    U0 = abs(float(U0))
    return t.base * (1.0 + U0) + np.asarray(k, dtype=float) * t.drift * U0 + weighted_error


# -------------------------------------------------------------------- report


@dataclass
class CertificateReport:
    """Per-row certificate values.

    ``slack = bound - gap``; ``violated`` is set iff ``slack < -tol``.
    Lyapunov steps are checked separately: ``lyap_violated`` is set iff
    ``dlyap > tol_lyap``. Rows where a check does not apply hold NaN.
    """

    name: str
    k: np.ndarray
    lyap: np.ndarray
    dlyap: np.ndarray
    bound: np.ndarray
    gap: np.ndarray
    tol: np.ndarray
    tol_lyap: np.ndarray
    eps_ref: float = 0.0
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        self.slack = self.bound - self.gap
        with np.errstate(invalid="ignore"):
            self.violated = np.nan_to_num(self.slack, nan=np.inf) < -self.tol
            self.lyap_violated = np.nan_to_num(self.dlyap, nan=-np.inf) > self.tol_lyap

    def __len__(self):
        return self.k.size

    @property
    def any_violation(self):
        return bool(self.violated.any() or self.lyap_violated.any())

    @property
    def ok(self):
        return not self.any_violation

    @property
    def first_violation(self) -> Optional[int]:
        bad = self.violated | self.lyap_violated
        return int(self.k[np.argmax(bad)]) if bad.any() else None

    @property
    def worst_slack(self) -> float:
        """Smallest ``slack / (|bound| + tol)`` over checked rows (NaN if none)."""
        s = self.slack / (np.abs(self.bound) + self.tol)
        s = s[np.isfinite(s)]
        return float(s.min()) if s.size else float("nan")

    @property
    def worst_lyap_margin(self) -> float:
        """Largest ``dlyap / tol_lyap`` over checked rows (<= 1 passes)."""
        s = self.dlyap / self.tol_lyap
        s = s[np.isfinite(s)]
        return float(s.max()) if s.size else float("nan")

    def columns(self):
        return {
            "k": self.k,
            "lyap": self.lyap,
            "dlyap": self.dlyap,
            "bound": self.bound,
            "gap": self.gap,
            "slack": self.slack,
            "violated": self.violated.astype(int),
            "lyap_violated": self.lyap_violated.astype(int),
        }


def _nan(n):
    return np.full(n, np.nan)


# ------------------------------------------------------------ shared pieces


@dataclass
class _Context:
    oracle: ObjectiveOracle
    trace: Trace
    x_star: np.ndarray
    R2: float
    eps_f: float
    eps_d: float  # error of a squared distance with unit coefficient
    dR2: float

    def dist2(self, v):
        return self.oracle.norm.primal(v - self.x_star) ** 2


def _context(trace: Trace, oracle: ObjectiveOracle) -> _Context:
    ref = oracle.require_reference()
    x_star = np.asarray(ref.x)
    N = oracle.norm
    R = N.primal(trace.x[0] - x_star)
    eps_f = eps_d = dR2 = 0.0
    if not ref.exact:
        if not math.isfinite(ref.radius):
            raise CertificateUnavailableError(
                f"reference for {oracle.name!r} has no finite error estimate"
            )
        pts = [trace.x, trace.y, trace.z]
        if trace.x_tilde is not None:
            pts.append(trace.x_tilde)
        D = max(max(N.primal(p - x_star) for p in arr) for arr in pts)
        d = ref.radius
        eps_f = ref.residual * d
        eps_d = 2.0 * D * d + d * d
        dR2 = 2.0 * R * d + d * d
    if oracle.excess is None:
        scale = max(abs(ref.f), float(np.max(np.abs(trace.f_x))), float(np.max(np.abs(trace.f_y))))
        if trace.f_xtilde is not None:
            scale = max(scale, float(np.max(np.abs(trace.f_xtilde))))
        eps_f += EVAL_ULPS * (1.0 + scale)
    return _Context(oracle, trace, x_star, R * R, eps_f, eps_d, dR2)


def gap_values(oracle: ObjectiveOracle, X) -> np.ndarray:
    return np.array([oracle.gap(x) for x in X])


def gap_term(oracle: ObjectiveOracle, x, grad=None) -> float:
    """``h(x) = f(x) - f_star - ||grad f(x)||_*^2 / (2L)``."""
    g = oracle.grad(x) if grad is None else grad
    return oracle.gap(x) - oracle.norm.dual(g) ** 2 / (2.0 * oracle.L)


def _h(ctx: _Context, X, G):
    o = ctx.oracle
    return np.array([o.gap(x) - o.norm.dual(g) ** 2 / (2.0 * o.L) for x, g in zip(X, G)])


def _theta_of(trace, theta):
    if theta is not None:
        return theta
    cfg = trace.config
    if cfg is None or cfg.theta is None:
        raise UsageError("trace has no theta schedule; pass one explicitly")
    return cfg.theta


def _check_k(trace, k, lo=0):
    if not (lo <= k <= trace.iterations):
        raise UsageError(f"k must lie in [{lo}, {trace.iterations}], got {k}")


def _next_z(trace: Trace, oracle: ObjectiveOracle, k: int, coeff: float) -> np.ndarray:
    """``z_{k+1}``: stored when available, else ``z_k - coeff Q^{-1} g_k``."""
    if k + 1 < len(trace):
        return trace.z[k + 1]
    return trace.z[k] - coeff * oracle.norm.apply_inverse(trace.grad_x[k])


# ------------------------------------------------------------ scalar values


def lyapunov_agm(trace: Trace, oracle: ObjectiveOracle, theta: Optional[ThetaSchedule] = None,
                 k: int = 0) -> float:
    """``U_k = theta_{k-1}^2 (f(y_k) - f*) + (L/2) ||z_k - x*||^2``."""
    theta = _theta_of(trace, theta)
    _check_k(trace, k)
    ctx = _context(trace, oracle)
    t = theta(k - 1)
    gap = oracle.gap(trace.y[k]) if t else 0.0
    return t * t * gap + 0.5 * oracle.L * ctx.dist2(trace.z[k])


def lyapunov_ogm(trace: Trace, oracle: ObjectiveOracle, theta: Optional[ThetaSchedule] = None,
                 k: int = -1) -> float:
    """``U_k = 2 theta_k^2 h(x_k) + (L/2) ||z_{k+1} - x*||^2`` for k >= -1."""
    theta = _theta_of(trace, theta)
    _check_k(trace, k, -1)
    ctx = _context(trace, oracle)
    L = oracle.L
    if k == -1:
        return 0.5 * L * ctx.R2
    t = theta(k)
    z1 = _next_z(trace, oracle, k, 2.0 * t / L)
    return 2.0 * t * t * gap_term(oracle, trace.x[k], trace.grad_x[k]) + 0.5 * L * ctx.dist2(z1)


def lyapunov_ogm_tilde(trace: Trace, oracle: ObjectiveOracle, phi: PhiSchedule, k: int) -> float:
    """``phi_k^2 (f(x~_k) - f*) + (L/2) ||z_k - (phi_k/L) Q^{-1} grad f(x~_k) - x*||^2``."""
    _need_tilde(trace)
    _check_k(trace, k)
    ctx = _context(trace, oracle)
    p = phi(k)
    L = oracle.L
    w = trace.z[k] - (p / L) * oracle.norm.apply_inverse(trace.grad_xtilde[k])
    return p * p * oracle.gap(trace.x_tilde[k]) + 0.5 * L * ctx.dist2(w)


def _need_tilde(trace):
    if trace.x_tilde is None:
        raise UsageError("trace has no last-step sequence")


def _need_sc(oracle):
    if oracle.mu <= 0.0:
        raise UsageError("strongly convex certificate needs mu > 0")


def _sc_next(trace: Trace, oracle: ObjectiveOracle, gamma: ScGamma, k: int) -> np.ndarray:
    """Auxiliary ``z_{k+1}`` for SC-OGM (closed form) or its mirror form."""
    if trace.method == "lc_sc_ogm":
        if k + 1 < len(trace):
            return trace.z[k + 1]
        g = gamma.gamma
        d = oracle.norm.apply_inverse(trace.grad_x[k])
        return (trace.z[k] + g * trace.x[k] - (g / oracle.mu) * d) / (1.0 + g)
    if k + 1 < len(trace):
        return sc_ogm_z(trace.x[k + 1], trace.y[k + 1], gamma)
    beta = gamma.momentum
    y1 = trace.x[k] - oracle.norm.apply_inverse(trace.grad_x[k]) / oracle.L
    x1 = y1 + beta * (y1 - trace.y[k]) + beta * (y1 - trace.x[k])
    return sc_ogm_z(x1, y1, gamma)


def _sc_z(trace, gamma, k):
    if trace.method == "lc_sc_ogm":
        return trace.z[k]
    return sc_ogm_z(trace.x[k], trace.y[k], gamma)


def _sc_w(ctx, gamma, k):
    o = ctx.oracle
    h = gap_term(o, ctx.trace.x[k], ctx.trace.grad_x[k])
    return h + 0.5 * o.mu * ctx.dist2(_sc_next(ctx.trace, o, gamma, k))


def _sc_w_tilde(ctx, gamma, k):
    o = ctx.oracle
    g = gamma.gamma
    tr = ctx.trace
    w = _sc_z(tr, gamma, k) - ((g + 2.0) / g / o.L) * o.norm.apply_inverse(tr.grad_x[k])
    return 2.0 * g / (1.0 + g) * o.gap(tr.x[k]) + 0.5 * o.mu * ctx.dist2(w)


def lyapunov_sc_ogm(trace: Trace, oracle: ObjectiveOracle, gamma: Optional[ScGamma] = None,
                    k: int = 0) -> float:
    """``U_k = (1+gamma)^k (h(x_k) + (mu/2) ||z_{k+1} - x*||^2)``."""
    _need_sc(oracle)
    gamma = gamma or gamma_sc(oracle.kappa)
    _check_k(trace, k)
    ctx = _context(trace, oracle)
    return (1.0 + gamma.gamma) ** k * _sc_w(ctx, gamma, k)


def lyapunov_sc_ogm_tilde(trace: Trace, oracle: ObjectiveOracle, gamma: Optional[ScGamma] = None,
                          k: int = 1) -> float:
    """``(1+gamma)^(k-1) (2gamma/(1+gamma) (f(x_k) - f*) + (mu/2)||z_k - (gamma+2)/(gamma L) Q^{-1} g_k - x*||^2)``."""
    _need_sc(oracle)
    gamma = gamma or gamma_sc(oracle.kappa)
    _check_k(trace, k)
    ctx = _context(trace, oracle)
    return (1.0 + gamma.gamma) ** (k - 1) * _sc_w_tilde(ctx, gamma, k)


def sc_ogm_initial_bound(oracle: ObjectiveOracle, gamma: ScGamma, R2: float) -> float:
    """Upper bound ``(mu + 2L)/2 ||x0 - x*||^2`` on ``U_0``."""
    return 0.5 * (oracle.mu + 2.0 * oracle.L) * R2


def lyapunov_lc(trace: Trace, oracle: ObjectiveOracle, coupling: CouplingSchedule,
                bregman: BregmanGenerator, k: int) -> float:
    """``Phi_k = (alpha_{k+1}^2 L / 2) h(x_k) + V_{z_{k+1}}(x*)``."""
    _check_k(trace, k)
    ctx = _context(trace, oracle)
    a = coupling.alpha(k + 1)
    z1 = _next_z(trace, oracle, k, bregman.t * a)
    h = gap_term(oracle, trace.x[k], trace.grad_x[k])
    return 0.5 * a * a * oracle.L * h + ctx.dist2(z1) / (2.0 * bregman.t)


def lc_step_rhs(trace: Trace, oracle: ObjectiveOracle, coupling: CouplingSchedule,
                bregman: BregmanGenerator, k: int) -> float:
    """Right side of the per-step inequality: ``(a^2 L - 2a)/2 h(x_{k-1}) + V_{z_k}(x*)``."""
    _check_k(trace, k)
    ctx = _context(trace, oracle)
    a = coupling.alpha(k + 1)
    j = max(k - 1, 0)
    h = gap_term(oracle, trace.x[j], trace.grad_x[j])
    return 0.5 * (a * a * oracle.L - 2.0 * a) * h + ctx.dist2(trace.z[k]) / (2.0 * bregman.t)


# --------------------------------------------------------------------- bounds


def _k_at_least(k, lo):
    if isinstance(k, bool) or int(k) != k or k < lo:
        raise UsageError(f"bound needs integer k >= {lo}, got {k}")
    return int(k)


def bound_agm(k, theta: ThetaSchedule, L, R2) -> float:
    k = _k_at_least(k, 1)
    t = theta(k - 1)
    return L * R2 / (2.0 * t * t)


def bound_ogm_primary(k, theta: ThetaSchedule, L, R2) -> float:
    k = _k_at_least(k, 1)
    t = theta(k - 1)
    return L * R2 / (4.0 * t * t)


def bound_ogm_secondary(k, phi: PhiSchedule, L, R2) -> float:
    k = _k_at_least(k, 0)
    if phi.variant == "simple" and k >= 1:
        return L * R2 / (k + 1 + 1.0 / math.sqrt(2.0)) ** 2
    p = phi(k)
    return L * R2 / (2.0 * p * p)


def bound_sc_ogm(k, gamma: ScGamma, mu, L, R2):
    """Return ``(bound on f(y_k) - f*, bound on f(x_k) - f*)``."""
    k = _k_at_least(k, 1)
    g = gamma.gamma
    c = 0.5 * (mu + 2.0 * L) * R2
    return (1.0 + g) ** (-k + 1) * c, (1.0 + g) ** (-k + 2) / (2.0 * g) * c


def bound_sc_agm(k, kappa, mu, L, R2) -> float:
    k = _k_at_least(k, 0)
    rate = 1.0 + 1.0 / (math.sqrt(kappa) - 1.0)
    return rate ** (-k) * 0.5 * (mu + L) * R2


def bound_lc(k, coupling: CouplingSchedule, L, V0, which="primary") -> float:
    if which == "primary":
        k = _k_at_least(k, 1)
        a = coupling.alpha(k)
        return 2.0 * V0 / (L * a * a)
    if which == "secondary":
        k = _k_at_least(k, 0)
        a = coupling.tilde_alpha(k + 1)
        return V0 / (L * a * a)
    raise UsageError(f"which must be 'primary' or 'secondary', got {which!r}")


# ------------------------------------------------------------------- reports


def _rows(trace):
    return np.arange(len(trace))


def report_agm(trace, oracle, theta=None) -> CertificateReport:
    theta = _theta_of(trace, theta)
    ctx = _context(trace, oracle)
    L = oracle.L
    K = trace.iterations
    th = np.concatenate(([0.0], theta.values(K)[:K]))  # theta_{k-1}
    gap = gap_values(oracle, trace.y)
    gap[0] = oracle.gap(trace.y[0])
    d2 = np.array([ctx.dist2(z) for z in trace.z])
    U = th * th * gap + 0.5 * L * d2
    U[0] = 0.5 * L * d2[0]
    k = _rows(trace)
    dU = _nan(K + 1)
    dU[1:] = U[1:] - U[:-1]
    w = th * th
    base = tolerance(k, U[0])
    tol_l = base + np.concatenate(([0.0], w[1:] + w[:-1])) * ctx.eps_f + L * ctx.eps_d
    bound = _nan(K + 1)
    with np.errstate(divide="ignore"):
        bound[1:] = L * ctx.R2 / (2.0 * th[1:] ** 2)
    tol_b = base + ctx.eps_f + np.nan_to_num(bound) * ctx.dR2 / max(ctx.R2, 1e-300)
    return CertificateReport("agm", k, U, dU, bound, gap, tol_b, tol_l, ctx.eps_f)


def _ogm_U(ctx, theta):
    """Array ``U_{-1}, U_0, ..., U_K``."""
    tr, o = ctx.trace, ctx.oracle
    L = o.L
    K = tr.iterations
    th = theta.values(K)
    h = _h(ctx, tr.x, tr.grad_x)
    z1 = np.array([_next_z(tr, o, k, 2.0 * th[k] / L) for k in range(K + 1)])
    d2 = np.array([ctx.dist2(z) for z in z1])
    U = 2.0 * th * th * h + 0.5 * L * d2
    return np.concatenate(([0.5 * L * ctx.R2], U)), th


def report_ogm(trace, oracle, theta=None) -> CertificateReport:
    """Primary OGM certificate: U_k nonincreasing from k = -1 and the y-bound."""
    theta = _theta_of(trace, theta)
    ctx = _context(trace, oracle)
    L = oracle.L
    K = trace.iterations
    U, th = _ogm_U(ctx, theta)
    k = _rows(trace)
    dU = U[1:] - U[:-1]
    w = 2.0 * th * th
    w_prev = np.concatenate(([0.0], w[:-1]))
    base = tolerance(k, U[0])
    tol_l = base + (w + w_prev) * ctx.eps_f + L * ctx.eps_d
    gap = gap_values(oracle, trace.y)
    bound = _nan(K + 1)
    bound[1:] = L * ctx.R2 / (4.0 * th[:-1] ** 2)
    tol_b = base + ctx.eps_f + np.nan_to_num(bound) * ctx.dR2 / max(ctx.R2, 1e-300)
    rep = CertificateReport("ogm", k, U[1:], dU, bound, gap, tol_b, tol_l, ctx.eps_f)
    rep.extras["U_init"] = U[0]
    return rep


def report_ogm_tilde(trace, oracle, theta=None, phi: Optional[PhiSchedule] = None) -> CertificateReport:
    """Secondary OGM certificate: chain U~_k <= U_{k-1} and the x~-bound."""
    _need_tilde(trace)
    theta = _theta_of(trace, theta)
    phi = phi or trace.config.phi
    ctx = _context(trace, oracle)
    L = oracle.L
    K = trace.iterations
    U, th = _ogm_U(ctx, theta)
    p = phi.values(K)
    N = oracle.norm
    Ut = np.empty(K + 1)
    for j in range(K + 1):
        w = trace.z[j] - (p[j] / L) * N.apply_inverse(trace.grad_xtilde[j])
        Ut[j] = p[j] ** 2 * oracle.gap(trace.x_tilde[j]) + 0.5 * L * ctx.dist2(w)
    k = _rows(trace)
    dU = Ut - U[:-1]
    w_prev = np.concatenate(([0.0], 2.0 * th[:-1] ** 2))
    base = tolerance(k, U[0])
    tol_l = base + (p * p + w_prev) * ctx.eps_f + L * ctx.eps_d
    gap = gap_values(oracle, trace.x_tilde)
    bound = np.array([bound_ogm_secondary(j, phi, L, ctx.R2) for j in k])
    bound[k < phi.validation_start] = np.nan
    tol_b = base + ctx.eps_f + np.nan_to_num(bound) * ctx.dR2 / max(ctx.R2, 1e-300)
    return CertificateReport("ogm_tilde", k, Ut, dU, bound, gap, tol_b, tol_l, ctx.eps_f)


def _lc_parts(trace, oracle, coupling, bregman):
    ctx = _context(trace, oracle)
    tr = trace
    L = oracle.L
    K = tr.iterations
    a = np.array([coupling.alpha(j + 1) for j in range(K + 1)])
    h = _h(ctx, tr.x, tr.grad_x)
    z1 = np.array([_next_z(tr, oracle, j, bregman.t * a[j]) for j in range(K + 1)])
    V1 = np.array([ctx.dist2(z) for z in z1]) / (2.0 * bregman.t)
    V = np.array([ctx.dist2(z) for z in tr.z]) / (2.0 * bregman.t)
    Phi = 0.5 * a * a * L * h + V1
    h_prev = np.concatenate(([h[0]], h[:-1]))
    rhs = 0.5 * (a * a * L - 2.0 * a) * h_prev + V
    return ctx, a, Phi, rhs, V


def report_lc(trace, oracle, coupling: CouplingSchedule, bregman: BregmanGenerator) -> CertificateReport:
    """Per-step coupling inequality ``Phi_k <= RHS_k`` and the y-bound."""
    if coupling.mode != "ogm":
        raise UsageError("per-step coupling inequality needs ogm-mode weights")
    ctx, a, Phi, rhs, V = _lc_parts(trace, oracle, coupling, bregman)
    L = oracle.L
    K = trace.iterations
    k = _rows(trace)
    V0 = V[0]
    w = 0.5 * a * a * L
    base = tolerance(k, V0)
    tol_l = base + 2.0 * w * ctx.eps_f + ctx.eps_d / bregman.t
    gap = gap_values(oracle, trace.y)
    bound = _nan(K + 1)
    bound[1:] = 2.0 * V0 / (L * a[:-1] ** 2)
    tol_b = base + ctx.eps_f + np.nan_to_num(bound) * ctx.dR2 / max(ctx.R2, 1e-300)
    rep = CertificateReport("lc", k, Phi, Phi - rhs, bound, gap, tol_b, tol_l, ctx.eps_f)
    rep.extras["V0"] = V0
    return rep


def report_lc_tilde(trace, oracle, coupling: CouplingSchedule, bregman: BregmanGenerator) -> CertificateReport:
    """Last-step chain ``Phi~_k <= Phi_{k-1}`` and the x~-bound."""
    _need_tilde(trace)
    if not coupling.has_tilde:
        raise UsageError("coupling schedule has no last-step weights")
    ctx, a, Phi, rhs, V = _lc_parts(trace, oracle, coupling, bregman)
    L = oracle.L
    K = trace.iterations
    N = oracle.norm
    at = np.array([coupling.tilde_alpha(j + 1) for j in range(K + 1)])
    Pt = np.empty(K + 1)
    for j in range(K + 1):
        zt = trace.z[j] - (bregman.t * at[j]) * N.apply_inverse(trace.grad_xtilde[j])
        Pt[j] = at[j] ** 2 * L * oracle.gap(trace.x_tilde[j]) + ctx.dist2(zt) / (2.0 * bregman.t)
    prev = np.concatenate(([V[0]], Phi[:-1]))
    k = _rows(trace)
    base = tolerance(k, V[0])
    w_prev = np.concatenate(([0.0], 0.5 * a[:-1] ** 2 * L))
    tol_l = base + (at * at * L + w_prev) * ctx.eps_f + ctx.eps_d / bregman.t
    gap = gap_values(oracle, trace.x_tilde)
    bound = V[0] / (L * at * at)
    start = coupling.phi.validation_start
    bound[k < start] = np.nan
    tol_b = base + ctx.eps_f + np.nan_to_num(bound) * ctx.dR2 / max(ctx.R2, 1e-300)
    return CertificateReport("lc_tilde", k, Pt, Pt - prev, bound, gap, tol_b, tol_l, ctx.eps_f)


def _sc_mask(W, scale):
    """Rows whose previous Lyapunov value is still resolvable."""
    prev = np.concatenate(([np.inf], W[:-1]))
    alive = np.cumprod(prev > _ACTIVE.get().floor * scale).astype(bool)
    return alive


def report_sc_ogm(trace, oracle, gamma: Optional[ScGamma] = None) -> CertificateReport:
    """Contraction ``(1+gamma) W_k <= W_{k-1}``, ``U_0`` bound and the y-bound.

    Row 0 holds ``dlyap = W_0 - (mu + 2L)/2 R^2``. Works for SC-OGM and its
    mirror-descent form (coupling contraction).
    """
    _need_sc(oracle)
    gamma = gamma or gamma_sc(oracle.kappa)
    ctx = _context(trace, oracle)
    K = trace.iterations
    g = gamma.gamma
    W = np.array([_sc_w(ctx, gamma, j) for j in range(K + 1)])
    scale = sc_ogm_initial_bound(oracle, gamma, ctx.R2)
    alive = _sc_mask(W, scale)
    k = _rows(trace)
    dW = _nan(K + 1)
    dW[1:] = W[1:] - W[:-1] / (1.0 + g)
    dW[0] = W[0] - scale
    errW = ctx.eps_f + 0.5 * oracle.mu * ctx.eps_d
    tol_l = np.empty(K + 1)
    tol_l[1:] = _ACTIVE.get().relative * W[:-1] + 2.0 * errW
    tol_l[0] = tolerance(0, scale) + errW + 0.5 * (oracle.mu + 2 * oracle.L) * ctx.dR2
    dW[~alive] = np.nan
    gap = gap_values(oracle, trace.y)
    bound = _nan(K + 1)
    bound[1:] = (1.0 + g) ** (-k[1:] + 1.0) * scale
    bound[~alive] = np.nan
    tol_b = tolerance(k, scale) + ctx.eps_f + np.nan_to_num(bound) * ctx.dR2 / max(ctx.R2, 1e-300)
    rep = CertificateReport("sc_ogm", k, W, dW, bound, gap, tol_b, tol_l, ctx.eps_f)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = W[1:] / W[:-1]
    live = alive[1:] & (W[:-1] > 0)
    rep.extras["max_ratio"] = float(ratio[live].max()) if live.any() else float("nan")
    rep.extras["rate"] = 1.0 / (1.0 + g)
    rep.extras["checked_rows"] = int(alive.sum())
    return rep


def report_sc_ogm_tilde(trace, oracle, gamma: Optional[ScGamma] = None) -> CertificateReport:
    """Chain ``U~_k <= U_{k-1}`` (k >= 1) and the x-bound, rate-normalized."""
    _need_sc(oracle)
    gamma = gamma or gamma_sc(oracle.kappa)
    ctx = _context(trace, oracle)
    K = trace.iterations
    g = gamma.gamma
    W = np.array([_sc_w(ctx, gamma, j) for j in range(K + 1)])
    Wt = _nan(K + 1)
    Wt[1:] = [_sc_w_tilde(ctx, gamma, j) for j in range(1, K + 1)]
    scale = sc_ogm_initial_bound(oracle, gamma, ctx.R2)
    alive = _sc_mask(W, scale)
    alive[0] = False
    k = _rows(trace)
    d = _nan(K + 1)
    d[1:] = Wt[1:] - W[:-1]
    errW = ctx.eps_f + 0.5 * oracle.mu * ctx.eps_d
    tol_l = np.full(K + 1, np.inf)
    tol_l[1:] = _ACTIVE.get().relative * W[:-1] + 2.0 * errW
    d[~alive] = np.nan
    gap = gap_values(oracle, trace.x)
    bound = _nan(K + 1)
    bound[1:] = (1.0 + g) ** (-k[1:] + 2.0) / (2.0 * g) * scale
    bound[~alive] = np.nan
    tol_b = tolerance(k, scale) + ctx.eps_f + np.nan_to_num(bound) * ctx.dR2 / max(ctx.R2, 1e-300)
    return CertificateReport("sc_ogm_tilde", k, Wt, d, bound, gap, tol_b, tol_l, ctx.eps_f)


def report_sc_agm(trace, oracle) -> CertificateReport:
    """Contraction by ``1 + 1/(sqrt(kappa) - 1)`` and the y-bound."""
    _need_sc(oracle)
    kappa = oracle.kappa
    if not kappa > 1.0:
        raise UsageError("SC-AGM certificate needs kappa > 1")
    ctx = _context(trace, oracle)
    K = trace.iterations
    r = math.sqrt(kappa)
    rate = 1.0 + 1.0 / (r - 1.0)
    gap = gap_values(oracle, trace.y)
    W = np.array([gap[j] + 0.5 * oracle.mu * ctx.dist2((r + 1.0) * trace.x[j] - r * trace.y[j])
                  for j in range(K + 1)])
    scale = 0.5 * (oracle.mu + oracle.L) * ctx.R2
    alive = _sc_mask(W, scale)
    k = _rows(trace)
    dW = _nan(K + 1)
    dW[1:] = W[1:] - W[:-1] / rate
    dW[0] = W[0] - scale
    errW = ctx.eps_f + 0.5 * oracle.mu * ctx.eps_d
    tol_l = np.empty(K + 1)
    tol_l[1:] = _ACTIVE.get().relative * W[:-1] + 2.0 * errW
    tol_l[0] = tolerance(0, scale) + errW + 0.5 * (oracle.mu + oracle.L) * ctx.dR2
    dW[~alive] = np.nan
    bound = rate ** (-k.astype(float)) * scale
    bound[0] = np.nan
    bound[~alive] = np.nan
    tol_b = tolerance(k, scale) + ctx.eps_f + np.nan_to_num(bound) * ctx.dR2 / max(ctx.R2, 1e-300)
    rep = CertificateReport("sc_agm", k, W, dW, bound, gap, tol_b, tol_l, ctx.eps_f)
    rep.extras["rate"] = 1.0 / rate
    return rep


def report_gap_terms(trace, oracle) -> CertificateReport:
    """``h(x_k) >= -tol`` at every row (stored as ``slack = h``)."""
    ctx = _context(trace, oracle)
    h = _h(ctx, trace.x, trace.grad_x)
    k = _rows(trace)
    n = len(trace)
    tol = tolerance(k, 0.5 * oracle.L * ctx.R2) + ctx.eps_f
    return CertificateReport("gap_term", k, _nan(n), _nan(n), np.zeros(n), -h, tol, np.full(n, np.inf), ctx.eps_f)


def _coco(oracle, fx, gx, fy, gy, x, y):
    return fy - fx - float(gx @ (y - x)) - oracle.norm.dual(gx - gy) ** 2 / (2.0 * oracle.L)


def check_cocoercivity_chain(trace: Trace, oracle: ObjectiveOracle) -> CertificateReport:
    """Audit ``f(y) >= f(x) + <g_x, y - x> + ||g_x - g_y||_*^2 / (2L)``.

    Pairs: ``(x_k, x_{k+1})`` in both orders and, when a reference exists,
    ``(x_k, x*)`` in both orders. Row k stores the smallest slack among the
    pairs involving ``x_k``; the tolerance is ``1e-8`` times
    ``1 + |f(x)| + |f(y)| + L ||x - y||^2`` of that pair.
    """
    X, G, F = trace.x, trace.grad_x, trace.f_x
    n = len(trace)
    L = oracle.L
    N = oracle.norm
    slack = np.full(n, np.inf)
    tol = np.full(n, np.inf)
    normalized = np.full(n, np.inf)
    coco = _ACTIVE.get().cocoercivity

    def note(j, s, sc):
        r = s / sc
        if r < normalized[j]:
            normalized[j] = r
            slack[j] = s
            tol[j] = coco * sc

    pairs = [(j, j + 1) for j in range(n - 1)]
    for i, j in pairs:
        sc = 1.0 + abs(F[i]) + abs(F[j]) + L * N.primal(X[i] - X[j]) ** 2
        note(i, _coco(oracle, F[i], G[i], F[j], G[j], X[i], X[j]), sc)
        note(i, _coco(oracle, F[j], G[j], F[i], G[i], X[j], X[i]), sc)
    if oracle.reference is not None:
        xs = np.asarray(oracle.reference.x)
        gs = oracle.grad(xs)
        fs = oracle.f(xs)
        for i in range(n):
            sc = 1.0 + abs(F[i]) + abs(fs) + L * N.primal(X[i] - xs) ** 2
            note(i, _coco(oracle, F[i], G[i], fs, gs, X[i], xs), sc)
            note(i, _coco(oracle, fs, gs, F[i], G[i], xs, X[i]), sc)
    fin = np.isfinite(slack)
    slack[~fin] = np.nan
    tol[~fin] = np.inf
    k = _rows(trace)
    rep = CertificateReport("cocoercivity", k, _nan(n), _nan(n), np.zeros(n), -slack, tol,
                            np.full(n, np.inf))
    good = normalized[np.isfinite(normalized)]
    rep.extras["min_normalized_slack"] = float(good.min()) if good.size else float("nan")
    return rep


# ------------------------------------------------------------------ dispatch


def _lc_view(trace):
    """Coupling schedule and Bregman generator certifying an LC trace.

    agm-mode weights are half the ogm-mode ones, so such a run is the
    ogm-mode method with Bregman scale t/2.
    """
    cfg = trace.config
    coupling, breg = cfg.coupling, cfg.bregman
    if coupling.mode == "agm":
        coupling = CouplingSchedule(coupling.theta, coupling.L, "ogm", phi=coupling.phi)
        breg = BregmanGenerator(breg.norm, breg.t / 2.0)
    return coupling, breg


def certify(trace: Trace, oracle: ObjectiveOracle) -> Dict[str, CertificateReport]:
    """All certificates that apply to the trace's method.

    Keys: ``primary`` and, when a secondary sequence applies, ``secondary``;
    always ``gap_term`` and ``cocoercivity``.
    """
    oracle.require_reference()
    cfg = trace.config
    if cfg is None:
        raise UsageError("trace carries no method configuration")
    a = cfg.algorithm
    out: Dict[str, CertificateReport] = {}
    if a in ("agm", "agm_z"):
        out["primary"] = report_agm(trace, oracle)
        if trace.x_tilde is not None:
            # AGM with phi weights is the t = 1/2 member of the coupling family
            c = CouplingSchedule(cfg.theta, oracle.L, "ogm", phi=cfg.phi)
            out["secondary"] = report_lc_tilde(trace, oracle, c, BregmanGenerator(oracle.norm, 0.5))
    elif a in ("ogm", "ogm_z", "simple_ogm"):
        out["primary"] = report_ogm(trace, oracle)
        if trace.x_tilde is not None:
            out["secondary"] = report_ogm_tilde(trace, oracle)
    elif a in ("unified", "lc"):
        if a == "lc":
            coupling, breg = _lc_view(trace)
        else:
            coupling = CouplingSchedule(cfg.theta, oracle.L, "ogm", phi=cfg.phi if cfg.last_step else None)
            breg = BregmanGenerator(oracle.norm, cfg.t)
        out["primary"] = report_lc(trace, oracle, coupling, breg)
        if trace.x_tilde is not None:
            out["secondary"] = report_lc_tilde(trace, oracle, coupling, breg)
    elif a in ("sc_ogm", "lc_sc_ogm"):
        out["primary"] = report_sc_ogm(trace, oracle, cfg.gamma)
        out["secondary"] = report_sc_ogm_tilde(trace, oracle, cfg.gamma)
    elif a == "sc_agm":
        out["primary"] = report_sc_agm(trace, oracle)
    out["gap_term"] = report_gap_terms(trace, oracle)
    out["cocoercivity"] = check_cocoercivity_chain(trace, oracle)
    return out
