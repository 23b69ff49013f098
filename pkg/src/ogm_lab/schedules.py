"""Scalar parameter sequences: theta, phi, gamma and coupling weights.

The exact theta sequence is produced by :func:`ogm_lab.kernels.theta_sweep`,
which accumulates ``theta_k - 1 - k/2`` with compensated summation. All
schedules are memoized; extension replaces the backing array under a lock
and never alters an existing prefix.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import kernels
from .errors import DomainError, ScheduleInvalidError, UsageError

#: relative slack allowed on schedule constraints (pure roundoff)
CONSTRAINT_TOL = 1e-12

SQRT2 = math.sqrt(2.0)


class _ExactTable:
    """Shared memo of the exact theta sweep."""

    def __init__(self):
        self._lock = threading.Lock()
        self._theta = np.ones(1)
        self._excess = np.zeros(1)
        self._eta = np.zeros(1)

    def ensure(self, n):
        if n < self._theta.size:
            return
        with self._lock:
            if n < self._theta.size:
                return
            size = max(n + 1, 2 * self._theta.size, 1024)
            th, ex, et = kernels.theta_sweep(size - 1)
            for a in (th, ex, et):
                a.setflags(write=False)
            # publish excess/eta first so readers of theta never see a short twin
            self._excess, self._eta = ex, et
            self._theta = th

    def theta(self, n):
        self.ensure(n)
        return self._theta[: n + 1]

    def excess(self, n):
        self.ensure(n)
        return self._excess[: n + 1]

    def eta(self, n):
        self.ensure(n)
        return self._eta[: n + 1]

    def clear(self):
        with self._lock:
            self._theta = np.ones(1)
            self._excess = np.zeros(1)
            self._eta = np.zeros(1)


_EXACT = _ExactTable()


def clear_caches():
    """Drop memoized sequences (used to make replays independent)."""
    _EXACT.clear()


def _check_index(k, lo):
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)):
        raise UsageError(f"index must be an integer, got {k!r}")
    if k < lo:
        raise UsageError(f"index must be >= {lo}, got {k}")
    return int(k)


class ThetaSchedule:
    """The sequence theta_k with theta_{-1} = 0.

    Parameters
    ----------
    variant : {"exact", "simple", "custom"}
    values : sequence of float, optional
        Custom values theta_0, theta_1, ... (custom variant).
    func : callable, optional
        Custom generator ``k -> theta_k`` for k >= 0 (custom variant).
    check : bool
        Validate the relaxed recurrence whenever values are requested via
        :meth:`validate`. Custom schedules built with ``check=False`` are
        allowed to break it; this is how mutation tests inject faults.
    """

    VARIANTS = ("exact", "simple", "custom")

    def __init__(self, variant="exact", values: Optional[Sequence[float]] = None,
                 func: Optional[Callable[[int], float]] = None, check=True, label=None):
        if variant not in self.VARIANTS:
            raise UsageError(f"unknown theta variant {variant!r}")
        if variant == "custom" and (values is None) == (func is None):
            raise UsageError("custom theta needs exactly one of values or func")
        self.variant = variant
        self.check = bool(check)
        self.label = label or variant
        self._func = func
        self._lock = threading.Lock()
        self._custom = None
        if values is not None:
            arr = np.array(values, dtype=np.float64)
            if arr.ndim != 1 or arr.size == 0 or not np.all(np.isfinite(arr)):
                raise UsageError("custom theta values must be a finite 1-D sequence")
            arr.setflags(write=False)
            self._custom = arr
        self._validated_upto = -1

    @classmethod
    def exact(cls):
        return cls("exact")

    @classmethod
    def simple(cls):
        return cls("simple")

    @classmethod
    def custom(cls, values=None, func=None, check=True, label="custom"):
        return cls("custom", values=values, func=func, check=check, label=label)

    def _custom_upto(self, n):
        arr = self._custom
        if arr is not None and arr.size > n:
            return arr
        if self._func is None:
            raise UsageError(f"custom theta defined only up to index {arr.size - 1}")
        with self._lock:
            arr = self._custom
            start = 0 if arr is None else arr.size
            if start <= n:
                size = max(n + 1, 2 * start, 64)
                new = np.empty(size)
                if arr is not None:
                    new[:start] = arr
                for j in range(start, size):
                    new[j] = float(self._func(j))
                if not np.all(np.isfinite(new)):
                    raise UsageError("custom theta produced a non-finite value")
                new.setflags(write=False)
                self._custom = arr = new
        return arr

    def __call__(self, k) -> float:
        k = _check_index(k, -1)
        if k == -1:
            return 0.0
        if self.variant == "exact":
            return float(_EXACT.theta(k)[k])
        if self.variant == "simple":
            return (k + 2) / 2.0
        return float(self._custom_upto(k)[k])

    def values(self, n) -> np.ndarray:
        """Array ``theta_0 .. theta_n`` (read-only for exact/custom)."""
        n = _check_index(n, 0)
        if self.variant == "exact":
            return _EXACT.theta(n)
        if self.variant == "simple":
            return (np.arange(n + 1, dtype=np.float64) + 2.0) / 2.0
        return self._custom_upto(n)[: n + 1]

    def validate(self, upto):
        """Check theta_0 and the relaxed recurrence for indices <= ``upto``.

        Raises :class:`ScheduleInvalidError` naming the first index whose
        value breaks ``0 <= theta_k^2 - theta_k <= theta_{k-1}^2``.
        """
        if not self.check or upto <= self._validated_upto:
            return self
        th = self.values(max(int(upto), 0))
        if self.variant != "simple" and th[0] != 1.0:
            raise ScheduleInvalidError("theta_0 must equal 1", 0)
        if th.size > 1:
            prev, cur = th[:-1], th[1:]
            lhs = cur * cur - cur
            tol = CONSTRAINT_TOL * np.maximum(1.0, prev * prev)
            bad = (lhs < -tol) | (lhs > prev * prev + tol) | (cur <= 0)
            if np.any(bad):
                raise ScheduleInvalidError(
                    "theta violates 0 <= theta_{k}^2 - theta_{k} <= theta_{k-1}^2",
                    int(np.argmax(bad)) + 1,
                )
        self._validated_upto = int(upto)
        return self

    def __repr__(self):
        return f"ThetaSchedule({self.label!r})"


class PhiSchedule:
    """Last-step weights phi_k tied to a theta schedule.

    The exact variant is the positive root of ``phi^2 - phi = 2 theta_{k-1}^2``
    (so phi_0 = 1). The simple variant is ``(k + 1 + 1/sqrt2)/sqrt2`` for
    k >= 1; at k = 0 the schedule object uses phi_0 = 1, the only value the
    k = 0 constraint admits, while :func:`phi_simple` refuses k = 0.
    """

    VARIANTS = ("exact", "simple")

    def __init__(self, variant="exact", theta: Optional[ThetaSchedule] = None):
        if variant not in self.VARIANTS:
            raise UsageError(f"unknown phi variant {variant!r}")
        self.variant = variant
        if theta is None:
            theta = ThetaSchedule("simple" if variant == "simple" else "exact")
        self.theta = theta

    @property
    def validation_start(self):
        return 1 if self.variant == "simple" else 0

    def __call__(self, k) -> float:
        k = _check_index(k, 0)
        if self.variant == "simple":
            return 1.0 if k == 0 else phi_simple(k)
        t = self.theta(k - 1)
        return (1.0 + math.sqrt(1.0 + 8.0 * t * t)) / 2.0

    def values(self, n) -> np.ndarray:
        n = _check_index(n, 0)
        if self.variant == "simple":
            out = (np.arange(n + 1, dtype=np.float64) + 1.0 + 1.0 / SQRT2) / SQRT2
            out[0] = 1.0
            return out
        prev = np.concatenate(([0.0], self.theta.values(n)[:n]))
        return (1.0 + np.sqrt(1.0 + 8.0 * prev * prev)) / 2.0

    def validate(self, upto):
        phi = self.values(max(int(upto), 0))
        prev = np.concatenate(([0.0], self.theta.values(phi.size - 1)[:-1]))
        k = np.arange(phi.size)
        lhs = phi * phi - phi
        cap = 2.0 * prev * prev
        tol = CONSTRAINT_TOL * np.maximum(1.0, cap)
        bad = ((lhs < -tol) | (lhs > cap + tol)) & (k >= self.validation_start)
        if np.any(bad):
            raise ScheduleInvalidError(
                "phi violates 0 <= phi_k^2 - phi_k <= 2 theta_{k-1}^2", int(np.argmax(bad))
            )
        return self

    def __repr__(self):
        return f"PhiSchedule({self.variant!r}, theta={self.theta!r})"


@dataclass(frozen=True)
class ScGamma:
    """Strongly convex step parameter: gamma solves (kappa-1) g^2 - 3 g - 2 = 0."""

    kappa: float
    gamma: float

    @property
    def momentum(self) -> float:
        """Momentum and correction coefficient 1/(2 gamma + 1)."""
        return 1.0 / (2.0 * self.gamma + 1.0)

    @property
    def rate(self) -> float:
        """Per-step contraction factor of the Lyapunov function is 1/rate."""
        return 1.0 + self.gamma

    @property
    def lc_tau(self) -> float:
        """Constant coupling weight of the mirror-descent form, gamma/(2 gamma + 1)."""
        return self.gamma / (2.0 * self.gamma + 1.0)


class CouplingSchedule:
    """Weights alpha_k, tau_k (and optionally alpha~_k, tau~_k) of linear coupling.

    Indices follow the method: ``alpha(k + 1)`` and ``tau(k + 1)`` are used in
    the step from k to k + 1, ``tau(0) = 1``.

    Parameters
    ----------
    theta : ThetaSchedule
    L : float
    mode : {"ogm", "agm"}
        ``alpha_{k+1} = 2 theta_k / L`` (ogm) or ``theta_k / L`` (agm);
        both use ``tau_k = 1/theta_k``.
    phi : PhiSchedule, optional
        Enables the last-step weights ``alpha~_{k+1} = phi_k / L``,
        ``tau~_k = 1/phi_k``.
    """

    def __init__(self, theta: ThetaSchedule, L: float, mode="ogm", phi: Optional[PhiSchedule] = None):
        if mode not in ("ogm", "agm"):
            raise UsageError(f"unknown coupling mode {mode!r}")
        L = float(L)
        if not (L > 0.0) or not math.isfinite(L):
            raise UsageError(f"L must be positive, got {L}")
        self.theta = theta
        self.L = L
        self.mode = mode
        self.phi = phi

    @property
    def has_tilde(self):
        return self.phi is not None

    def alpha(self, k) -> float:
        k = _check_index(k, 0)
        scale = 2.0 if self.mode == "ogm" else 1.0
        return scale * self.theta(k - 1) / self.L

    def tau(self, k) -> float:
        k = _check_index(k, 0)
        return 1.0 / self.theta(k)

    def tilde_alpha(self, k) -> float:
        k = _check_index(k, 1)
        self._need_tilde()
        return self.phi(k - 1) / self.L

    def tilde_tau(self, k) -> float:
        k = _check_index(k, 0)
        self._need_tilde()
        return 1.0 / self.phi(k)

    def _need_tilde(self):
        if self.phi is None:
            raise UsageError("coupling schedule has no last-step weights")

    def validate(self, upto):
        """Check the weight constraints for indices <= ``upto``.

        Constraints are tested in units of ``L`` (``a = alpha L``) so the
        relative tolerance is dimensionless.
        """
        upto = max(int(upto), 1)
        self.theta.validate(upto)
        th = self.theta.values(upto)
        if np.any(th <= 0) or np.any(1.0 / th > 1.0 + CONSTRAINT_TOL):
            bad = (th <= 0) | (1.0 / th > 1.0 + CONSTRAINT_TOL)
            raise ScheduleInvalidError("tau_k = 1/theta_k must lie in (0, 1]", int(np.argmax(bad)))
        if self.mode == "ogm":
            a = 2.0 * np.concatenate(([0.0], th))  # a_k = alpha_k L, a_0 = 0
            if a[1] != 2.0:
                raise ScheduleInvalidError("alpha_1 must equal 2/L", 1)
            lhs = a[2:] ** 2 - 2.0 * a[2:]
            cap = a[1:-1] ** 2
            tol = CONSTRAINT_TOL * np.maximum(1.0, cap)
            bad = (lhs < -tol) | (lhs > cap + tol)
            if np.any(bad):
                raise ScheduleInvalidError(
                    "alpha violates 0 <= alpha_{k}^2 L - 2 alpha_{k} <= alpha_{k-1}^2 L",
                    int(np.argmax(bad)) + 2,
                )
        if self.phi is not None:
            phi = self.phi.values(upto)
            if phi[0] != 1.0:
                raise ScheduleInvalidError("alpha~_1 must equal 1/L", 1)
            # alpha~_{k+1} L = phi_k, alpha_k L = 2 theta_{k-1}
            prev = np.concatenate(([0.0], th[:-1]))
            lhs = phi * phi - phi
            cap = 0.5 * (2.0 * prev) ** 2
            tol = CONSTRAINT_TOL * np.maximum(1.0, cap)
            start = self.phi.validation_start
            k = np.arange(phi.size)
            bad = ((lhs < -tol) | (lhs > cap + tol)) & (k >= start)
            if np.any(bad):
                raise ScheduleInvalidError(
                    "alpha~ violates 0 <= alpha~_{k+1}^2 L - alpha~_{k+1} <= alpha_k^2 L / 2",
                    int(np.argmax(bad)) + 1,
                )
        return self

    def __repr__(self):
        return f"CouplingSchedule(mode={self.mode!r}, L={self.L!r}, theta={self.theta!r})"


def theta_exact(k) -> float:
    """theta_k of the exact recurrence, with theta_{-1} = 0."""
    k = _check_index(k, -1)
    return 0.0 if k == -1 else float(_EXACT.theta(k)[k])


def theta_simple(k) -> float:
    k = _check_index(k, 0)
    return (k + 2) / 2.0


def phi_exact(k, theta: Optional[ThetaSchedule] = None) -> float:
    k = _check_index(k, 0)
    t = theta(k - 1) if theta is not None else theta_exact(k - 1)
    return (1.0 + math.sqrt(1.0 + 8.0 * t * t)) / 2.0


def phi_simple(k) -> float:
    k = _check_index(k, 0)
    if k == 0:
        raise UsageError("phi_simple is defined for k >= 1; use phi_exact(0) = 1 at k = 0")
    return (k + 1 + 1.0 / SQRT2) / SQRT2


def gamma_sc(kappa) -> ScGamma:
    """gamma = 4 / (sqrt(8 kappa + 1) - 3), defined for kappa > 1."""
    kappa = float(kappa)
    if not (kappa > 1.0 + 1e-9) or math.isnan(kappa):
        raise DomainError(f"gamma needs kappa > 1, got {kappa}")
    if math.isinf(kappa):
        raise DomainError("gamma needs a finite kappa")
    return ScGamma(kappa=kappa, gamma=4.0 / (math.sqrt(8.0 * kappa + 1.0) - 3.0))


def coupling_from_theta(theta: ThetaSchedule, L: float, mode="ogm") -> CouplingSchedule:
    return CouplingSchedule(theta, L, mode)


def tilde_coupling(theta: ThetaSchedule, phi: PhiSchedule, L: float) -> CouplingSchedule:
    if phi.theta is not theta and phi.theta.variant != theta.variant:
        raise UsageError("phi schedule must be built on the same theta schedule")
    return CouplingSchedule(theta, L, "ogm", phi=phi)


def theta_excess(n) -> np.ndarray:
    """``theta_k - (k + 2)/2`` for k = 0..n from the compensated sweep."""
    return _EXACT.excess(_check_index(n, 0))


def estimate_zeta(K):
    """Estimate zeta in ``theta_k = (k + zeta + 1)/2 + log(k)/4 + o(1)``.

    Returns
    -------
    zeta : float
        ``2 theta_K - K - 1 - log(K)/2``, evaluated as ``1 + 2 S_K - log(K)/2``
        with the compensated excess ``S_K`` to avoid cancellation.
    residual : float
        ``|zeta(K) - zeta(K // 10)|``.
    """
    K = _check_index(K, 100)
    S = _EXACT.excess(K)

    def z(j):
        return 1.0 + 2.0 * float(S[j]) - math.log(j) / 2.0

    return z(K), abs(z(K) - z(K // 10))


@dataclass(frozen=True)
class ThetaAudit:
    """Numerical check of the asymptotic characterization of theta_k."""

    K: int
    zeta: float
    residual: float
    c_max: float
    c_argmax: int
    c_first_violation: Optional[int]
    c_max_from3: float
    e_decreasing: bool
    e_first_increase: Optional[int]
    e_final: float
    e_lower: float
    decrement_bound_ok: bool


def audit_theta(K) -> ThetaAudit:
    """Replay theta_k for k <= K and test the asymptotic claims.

    * ``c_k = (theta_k - (k+2)/2) / log k`` compared with 1/4 on 2 <= k <= K;
    * ``e_k = theta_k - (k+2)/2 - log(k)/4`` decreasing on 1 <= k <= K, using
      the increments ``eta_k - log1p(1/k)/4`` so no cancellation occurs;
    * a lower bound for lim e_k from the summable decrement bound
      ``e_{k+1} - e_k >= 1/(4(k+2+(5/6)log(k+1))) - log1p(1/k)/4``.
    """
    K = _check_index(K, 100)
    S = _EXACT.excess(K)
    eta = _EXACT.eta(K)
    k = np.arange(2, K + 1, dtype=np.float64)
    c = S[2:] / np.log(k)
    c_first = np.flatnonzero(c >= 0.25)
    kk = np.arange(1, K, dtype=np.float64)
    de = eta[1:K] - np.log1p(1.0 / kk) / 4.0
    inc = np.flatnonzero(de >= 0.0)
    lower = 1.0 / (4.0 * (kk + 2.0 + (5.0 / 6.0) * np.log(kk + 1.0))) - np.log1p(1.0 / kk) / 4.0
    e = S[1:] - np.log(np.arange(1, K + 1, dtype=np.float64)) / 4.0
    # the decrement bound presumes |e_k| < log(k)/6
    pre = np.abs(e[:-1]) < np.log(kk) / 6.0
    bound_ok = bool(np.all(de[pre] >= lower[pre] - 1e-18))
    e_final = float(e[-1])
    # tail of the summable decrement bound beyond K
    tail = (5.0 / 6.0 * math.log(K) + 1.5 + 5.0 / 6.0) / K
    zeta, residual = estimate_zeta(K)
    return ThetaAudit(
        K=K,
        zeta=zeta,
        residual=residual,
        c_max=float(c.max()),
        c_argmax=int(np.argmax(c)) + 2,
        c_first_violation=int(c_first[0]) + 2 if c_first.size else None,
        c_max_from3=float(c[1:].max()) if c.size > 1 else float("nan"),
        e_decreasing=inc.size == 0,
        e_first_increase=int(inc[0]) + 1 if inc.size else None,
        e_final=e_final,
        e_lower=e_final - tail,
        decrement_bound_ok=bound_ok,
    )
