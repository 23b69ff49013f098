"""Objective oracles with smoothness constants and reference solutions.

Three families are provided: seeded quadratics, log-sum-exp, and logistic
regression read from a CSV file. Every oracle carries the norm in which its
smoothness constant ``L`` is measured.
"""
from __future__ import annotations

import csv
import dataclasses
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular
from scipy.special import expit, logsumexp, softmax

from .errors import (
    DatasetParseError,
    NoMinimizerError,
    ReferenceUnavailableError,
    UsageError,
)
from .numkit import QuadraticNorm, as_vector

log = logging.getLogger(__name__)

KINDS = ("quadratic", "log_sum_exp", "logistic")


@dataclass(frozen=True)
class Reference:
    """A (possibly approximate) minimizer.

    Attributes
    ----------
    x, f : minimizer and optimal value
    exact : True when obtained in closed form
    residual : dual norm of the gradient at ``x``
    radius : estimated distance from ``x`` to the true minimizer
    """

    x: np.ndarray
    f: float
    exact: bool = True
    residual: float = 0.0
    radius: float = 0.0
    iterations: int = 0


@dataclass(frozen=True)
class ObjectiveOracle:
    """Function and gradient of a smooth convex objective.

    ``excess`` (if set) evaluates ``f(x) - f_star`` without cancellation and
    ``hessian`` (if set) returns the Hessian matrix; both are optional.
    """

    eval_f: Callable[[np.ndarray], float]
    eval_grad: Callable[[np.ndarray], np.ndarray]
    L: float
    mu: float
    norm: QuadraticNorm
    name: str
    reference: Optional[Reference] = None
    excess: Optional[Callable[[np.ndarray], float]] = field(default=None, repr=False)
    hessian: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)

    def __post_init__(self):
        if not (self.L > 0.0 and math.isfinite(self.L)):
            raise UsageError(f"L must be positive and finite, got {self.L}")
        if not (0.0 <= self.mu <= self.L):
            raise UsageError(f"need 0 <= mu <= L, got mu={self.mu}, L={self.L}")

    @property
    def dim(self):
        return self.norm.dim

    @property
    def kappa(self):
        return math.inf if self.mu == 0.0 else self.L / self.mu

    def f(self, x) -> float:
        return float(self.eval_f(x))

    def grad(self, x) -> np.ndarray:
        return np.asarray(self.eval_grad(x), dtype=np.float64)

    def gap(self, x) -> float:
        """``f(x) - f_star`` using the closed form when one exists."""
        ref = self.require_reference()
        if self.excess is not None:
            return float(self.excess(x))
        return self.f(x) - ref.f

    def require_reference(self) -> Reference:
        from .errors import CertificateUnavailableError

        if self.reference is None:
            raise CertificateUnavailableError(f"oracle {self.name!r} has no reference solution")
        return self.reference

    def with_reference(self, reference: Optional[Reference]) -> "ObjectiveOracle":
        return dataclasses.replace(self, reference=reference)

    def with_L(self, L: float) -> "ObjectiveOracle":
        """Same objective with a different declared smoothness constant."""
        return dataclasses.replace(self, L=float(L), mu=min(self.mu, float(L)))


@dataclass(frozen=True)
class ProblemSpec:
    """Seeded description of a test problem.

    Conditioning parameters by kind:

    * quadratic: ``kappa`` (``inf`` for a singular PSD matrix), ``L``;
    * log_sum_exp: ``m`` terms, smoothing ``rho``;
    * logistic: ``data_path`` and ridge ``lam``.
    """

    kind: str
    dim: int = 4
    seed: int = 0
    kappa: float = 10.0
    L: float = 1.0
    m: Optional[int] = None
    rho: float = 1.0
    lam: float = 0.0
    data_path: Optional[str] = None
    ref_tol: float = 1e-12

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UsageError(f"unknown problem kind {self.kind!r}")
        if int(self.dim) < 1:
            raise UsageError("dimension must be >= 1")
        if not (0 <= int(self.seed) < 2**64):
            raise UsageError("seed must be a 64-bit unsigned integer")


# ---------------------------------------------------------------- eigenvalues


def _whitened(A, norm: QuadraticNorm):
    """``C^{-1} A C^{-T}`` for ``Q = C C^T``; its spectrum is that of Q^{-1}A."""
    if norm.is_identity:
        return 0.5 * (A + A.T)
    F = norm.factor
    W = solve_triangular(F, A, lower=True, check_finite=False)
    W = solve_triangular(F, W.T, lower=True, check_finite=False)
    return 0.5 * (W + W.T)


def _start_vector(n):
    v = 1.0 + np.arange(n, dtype=np.float64) / (3.0 * n)
    return v / np.linalg.norm(v)


def _power(apply, n, rtol=1e-15, stall=10, max_iter=200_000):
    """Largest eigenvalue of a symmetric PSD operator by power iteration."""
    v = _start_vector(n)
    rho_prev = -1.0
    calm = 0
    rho = 0.0
    for _ in range(max_iter):
        w = apply(v)
        rho = float(v @ w)
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            return 0.0
        v = w / nw
        if abs(rho - rho_prev) <= rtol * abs(rho):
            calm += 1
            if calm >= stall:
                break
        else:
            calm = 0
        rho_prev = rho
    return rho


def extreme_eigenvalues(A, norm: QuadraticNorm):
    """Largest and smallest eigenvalue of ``Q^{-1/2} A Q^{-1/2}``.

    Power iteration for the largest and inverse power iteration for the
    smallest; a singular (or numerically singular) matrix gives 0.
    """
    C = _whitened(np.asarray(A, dtype=np.float64), norm)
    n = C.shape[0]
    lmax = _power(lambda v: C @ v, n)
    if lmax <= 0.0:
        return 0.0, 0.0
    try:
        fac = cho_factor(C, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        return lmax, 0.0
    if np.min(np.abs(np.diag(fac[0]))) ** 2 < 1e-13 * lmax:
        return lmax, 0.0
    inv = _power(lambda v: cho_solve(fac, v, check_finite=False), n)
    lmin = 1.0 / inv if inv > 0 else 0.0
    if lmin < 1e-12 * lmax:
        lmin = 0.0
    return lmax, min(lmin, lmax)


# ------------------------------------------------------------------ quadratic


def quadratic_oracle(A, b, norm: Optional[QuadraticNorm] = None, name="quadratic",
                     mu: Optional[float] = None) -> ObjectiveOracle:
    """Oracle for ``f(x) = x^T A x / 2 - b^T x`` with an exact reference.

    ``mu`` may be passed when the smallest eigenvalue is known to be 0.
    """
    A = np.array(A, dtype=np.float64)
    b = as_vector(b, name="b")
    n = b.size
    if A.shape != (n, n):
        raise UsageError(f"A must be {n}x{n}")
    if np.max(np.abs(A - A.T)) > 1e-12 * max(1.0, np.max(np.abs(A))):
        raise UsageError("A must be symmetric")
    A = 0.5 * (A + A.T)
    A.setflags(write=False)
    norm = norm or QuadraticNorm.identity(n)
    if norm.dim != n:
        raise UsageError("norm dimension does not match A")
    L, mu_est = extreme_eigenvalues(A, norm)
    if L <= 0.0:
        raise UsageError("A must have a positive eigenvalue")
    mu = mu_est if mu is None else float(mu)

    if mu > 0.0:
        x_star = cho_solve(cho_factor(A, lower=True, check_finite=False), b, check_finite=False)
    else:
        x_star = np.linalg.lstsq(A, b, rcond=None)[0]
        scale = max(float(np.linalg.norm(b)), np.finfo(float).tiny)
        if np.linalg.norm(A @ x_star - b) > 1e-10 * scale and np.linalg.norm(b) > 0:
            raise NoMinimizerError("b is not in the range of the singular matrix A")
    x_star.setflags(write=False)

    def f(x):
        return 0.5 * float(x @ (A @ x)) - float(b @ x)

    def g(x):
        return A @ x - b

    def excess(x):
        d = x - x_star
        return 0.5 * float(d @ (A @ d))

    f_star = -0.5 * float(b @ x_star)
    return ObjectiveOracle(
        eval_f=f, eval_grad=g, L=L, mu=mu, norm=norm, name=name,
        reference=Reference(x=x_star, f=f_star, exact=True),
        excess=excess, hessian=lambda x: A,
    )


def _orthogonal(rng, n):
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.where(np.diag(r) < 0, -1.0, 1.0)


def make_quadratic(spec: ProblemSpec, norm: Optional[QuadraticNorm] = None) -> ObjectiveOracle:
    """Seeded quadratic whose ``Q``-relative spectrum spans ``[L/kappa, L]``.

    With ``kappa = inf`` a quarter of the eigenvalues (at least one) are zero
    and ``b`` is drawn from the range of ``A``.
    """
    if spec.kind != "quadratic":
        raise UsageError("make_quadratic needs kind 'quadratic'")
    n = int(spec.dim)
    norm = norm or QuadraticNorm.identity(n)
    rng = np.random.default_rng(int(spec.seed))
    L = float(spec.L)
    kappa = float(spec.kappa)
    if not (kappa >= 1.0):
        raise UsageError("kappa must be >= 1")
    singular = math.isinf(kappa)
    if singular:
        zeros = max(1, n // 4) if n > 1 else 0
        inner = L * np.exp(rng.uniform(math.log(1e-3), 0.0, size=n))
        inner[0] = L
        inner[n - zeros:] = 0.0
        lam = inner
    else:
        lam = L * np.exp(rng.uniform(-math.log(kappa), 0.0, size=n))
        lam[0] = L
        if n > 1:
            lam[-1] = L / kappa
    U = _orthogonal(rng, n)
    M = (U * lam) @ U.T
    F = norm.factor
    A = F @ M @ F.T
    if singular and n > 1:
        w = rng.standard_normal(n)
        b = A @ w
    else:
        b = rng.standard_normal(n)
    name = f"quadratic(n={n},kappa={spec.kappa:g},seed={spec.seed})"
    return quadratic_oracle(A, b, norm, name=name, mu=0.0 if singular and n > 1 else None)


# ---------------------------------------------------------------- log-sum-exp


def log_sum_exp_oracle(A, b, rho=1.0, name="log_sum_exp") -> ObjectiveOracle:
    """``f(x) = rho log sum_i exp((a_i^T x - b_i)/rho)`` with ``L = ||A||_2^2 / rho``."""
    rho = float(rho)
    if not (rho > 0.0) or not math.isfinite(rho):
        raise UsageError(f"rho must be positive, got {rho}")
    A = np.array(A, dtype=np.float64, ndmin=2)
    b = as_vector(b, dim=A.shape[0], name="b")
    A.setflags(write=False)
    L = float(np.linalg.norm(A, 2)) ** 2 / rho
    if L == 0.0:
        raise UsageError("A must be nonzero")

    def f(x):
        return rho * float(logsumexp((A @ x - b) / rho))

    def g(x):
        return A.T @ softmax((A @ x - b) / rho)

    def hess(x):
        p = softmax((A @ x - b) / rho)
        Ap = A.T @ p
        return ((A.T * p) @ A - np.outer(Ap, Ap)) / rho

    n = A.shape[1]
    return ObjectiveOracle(eval_f=f, eval_grad=g, L=L, mu=0.0,
                           norm=QuadraticNorm.identity(n), name=name, hessian=hess)


def make_log_sum_exp(spec: ProblemSpec) -> ObjectiveOracle:
    """Seeded log-sum-exp with mean-centred rows, so a minimizer exists.

    Centring makes ``sum_i a_i = 0``; then ``f`` grows along every direction
    not orthogonal to all rows, and the minimum is attained.
    """
    if spec.kind != "log_sum_exp":
        raise UsageError("make_log_sum_exp needs kind 'log_sum_exp'")
    if not (spec.rho > 0.0):
        raise UsageError(f"rho must be positive, got {spec.rho}")
    n = int(spec.dim)
    m = int(spec.m) if spec.m is not None else 2 * n
    if m < 2:
        raise UsageError("a seeded log-sum-exp instance needs m >= 2")
    rng = np.random.default_rng(int(spec.seed))
    A = rng.standard_normal((m, n))
    A -= A.mean(axis=0)
    b = 0.5 * rng.standard_normal(m)
    name = f"log_sum_exp(n={n},m={m},rho={spec.rho:g},seed={spec.seed})"
    oracle = log_sum_exp_oracle(A, b, spec.rho, name=name)
    return _try_refine(oracle, spec.ref_tol)


# ------------------------------------------------------------------- logistic


def _parse_label(text, line):
    try:
        value = float(text)
    except ValueError:
        raise DatasetParseError(f"label {text!r} is not a number", line) from None
    if value not in (-1.0, 1.0):
        raise DatasetParseError(f"label must be -1 or +1, got {text!r}", line)
    return value


def load_dataset(path):
    """Read ``label, feature_1..feature_n`` rows (no header).

    Returns
    -------
    labels : ndarray (m,)
    features : ndarray (m, n)
    """
    labels, rows = [], []
    width = None
    with open(path, newline="", encoding="utf-8-sig") as fh:
        for line, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < 2:
                raise DatasetParseError("expected a label and at least one feature", line)
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise DatasetParseError(f"expected {width} columns, got {len(row)}", line)
            labels.append(_parse_label(row[0].strip(), line))
            try:
                feats = [float(c) for c in row[1:]]
            except ValueError:
                raise DatasetParseError("feature is not a number", line) from None
            if not all(math.isfinite(v) for v in feats):
                raise DatasetParseError("feature is not finite", line)
            rows.append(feats)
    if not rows:
        raise UsageError(f"dataset {path} has no samples")
    return np.array(labels), np.array(rows)


def logistic_oracle(labels, features, lam=0.0, name="logistic") -> ObjectiveOracle:
    """Ridge-regularised logistic loss averaged over samples."""
    lam = float(lam)
    if lam < 0.0:
        raise UsageError("ridge parameter must be >= 0")
    A = np.array(features, dtype=np.float64, ndmin=2)
    lab = np.asarray(labels, dtype=np.float64)
    m, n = A.shape
    if m == 0:
        raise UsageError("logistic objective needs at least one sample")
    M = lab[:, None] * A
    M.setflags(write=False)
    L = float(np.linalg.norm(A, 2)) ** 2 / (4.0 * m) + lam
    if L == 0.0:
        raise UsageError("features are all zero and lam = 0")

    def f(x):
        return float(np.mean(np.logaddexp(0.0, -(M @ x)))) + 0.5 * lam * float(x @ x)

    def g(x):
        return -(M.T @ expit(-(M @ x))) / m + lam * x

    def hess(x):
        s = expit(M @ x)
        return (M.T * (s * (1.0 - s))) @ M / m + lam * np.eye(n)

    return ObjectiveOracle(eval_f=f, eval_grad=g, L=L, mu=lam,
                           norm=QuadraticNorm.identity(n), name=name, hessian=hess)


def make_logistic(spec: ProblemSpec) -> ObjectiveOracle:
    if spec.kind != "logistic":
        raise UsageError("make_logistic needs kind 'logistic'")
    if spec.data_path is None:
        raise UsageError("logistic problems need data_path")
    labels, feats = load_dataset(spec.data_path)
    name = f"logistic({Path(spec.data_path).name},lam={spec.lam:g})"
    oracle = logistic_oracle(labels, feats, spec.lam, name=name)
    return _try_refine(oracle, spec.ref_tol)


def make_problem(spec: ProblemSpec, norm: Optional[QuadraticNorm] = None) -> ObjectiveOracle:
    if spec.kind == "quadratic":
        return make_quadratic(spec, norm)
    if norm is not None and not norm.is_identity:
        raise UsageError(f"{spec.kind} problems are defined for the Euclidean norm only")
    if spec.kind == "log_sum_exp":
        return make_log_sum_exp(spec)
    return make_logistic(spec)


# ------------------------------------------------------------------ reference


def _try_refine(oracle, tol):
    try:
        return refine_reference(oracle, tol)
    except ReferenceUnavailableError as exc:
        log.warning("%s: %s", oracle.name, exc)
        return oracle


def _local_mu(oracle, x):
    if oracle.mu > 0.0:
        return oracle.mu
    if oracle.hessian is None:
        return 0.0
    H = _whitened(np.asarray(oracle.hessian(x), dtype=np.float64), oracle.norm)
    return max(float(np.linalg.eigvalsh(H)[0]), 0.0)


def refine_reference(oracle: ObjectiveOracle, tol: float = 1e-12,
                     max_iter: int = 10**6, x0=None) -> ObjectiveOracle:
    """Install an approximate minimizer computed by restarted OGM.

    The iteration stops once ``||grad f(x)||_* <= tol L (1 + ||x||)``. The
    momentum is reset whenever the gradient at ``x_k`` makes an acute angle
    with the last step ``y_{k+1} - y_k``; this keeps the worst-case rate of
    OGM and adds linear convergence near a well-conditioned minimizer.

    The installed :class:`Reference` records the residual and a distance
    estimate ``residual / mu_loc`` with ``mu_loc`` the strong convexity
    constant (or the smallest Hessian eigenvalue at the reference).
    """
    tol = float(tol)
    if not (tol > 0.0):
        raise UsageError("tol must be positive")
    ref = oracle.reference
    if ref is not None and ref.exact:
        return oracle
    N = oracle.norm
    L = oracle.L
    x = np.zeros(oracle.dim) if x0 is None else as_vector(x0, oracle.dim)
    if ref is not None and x0 is None:
        x = np.array(ref.x)
    y = x.copy()
    z = x.copy()
    theta = 1.0
    g = oracle.grad(x)

    def converged(x, g):
        return N.dual(g) <= tol * L * (1.0 + N.primal(x))

    it = 0
    while not converged(x, g):
        if it >= max_iter:
            raise ReferenceUnavailableError(
                f"gradient residual {N.dual(g):.3e} above tolerance after {max_iter} iterations"
            )
        d = N.apply_inverse(g)
        y_new = x - d / L
        theta_new = (1.0 + math.sqrt(1.0 + 4.0 * theta * theta)) / 2.0
        z = z - (2.0 * theta / L) * d
        if float(g @ (y_new - y)) > 0.0:
            theta_new = 1.0
            z = y_new.copy()
        x = (1.0 - 1.0 / theta_new) * y_new + z / theta_new
        y = y_new
        theta = theta_new
        g = oracle.grad(x)
        if not np.all(np.isfinite(g)):
            raise ReferenceUnavailableError("non-finite gradient while refining the reference")
        it += 1
    residual = N.dual(g)
    mu_loc = _local_mu(oracle, x)
    radius = residual / mu_loc if mu_loc > 0.0 else math.inf
    x = np.array(x)
    x.setflags(write=False)
    return oracle.with_reference(
        Reference(x=x, f=oracle.f(x), exact=False, residual=residual,
                  radius=radius, iterations=it)
    )
