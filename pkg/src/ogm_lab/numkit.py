"""Quadratic norms, their duals and quadratic Bregman divergences.

Vectors are 1-D float64 numpy arrays. A :class:`QuadraticNorm` caches the
lower Cholesky factor of its matrix, so every application of ``Q^{-1}`` is a
pair of triangular solves.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.linalg import solve_triangular

from .errors import DimensionMismatchError, NotPositiveDefiniteError, UsageError

SYMMETRY_RTOL = 1e-12
PIVOT_RTOL = 1e-12


def as_vector(x, dim=None, name="x"):
    """Return ``x`` as a finite 1-D float64 array, checking its length."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1 or v.size == 0:
        raise UsageError(f"{name} must be a non-empty 1-D vector")
    if dim is not None and v.size != dim:
        raise DimensionMismatchError(f"{name} has dimension {v.size}, expected {dim}")
    if not np.all(np.isfinite(v)):
        raise UsageError(f"{name} has non-finite entries")
    return v


def _frozen(a):
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


class QuadraticNorm:
    """The norm ``sqrt(x^T Q x)`` for a symmetric positive definite ``Q``.

    Parameters
    ----------
    Q : array_like
        Square SPD matrix. Symmetry is checked entrywise to a relative
        tolerance of 1e-12 and the matrix is then symmetrized exactly.
    """

    __slots__ = ("_Q", "_factor", "_identity", "_dim")

    def __init__(self, Q):
        Q = np.asarray(Q, dtype=np.float64)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1] or Q.shape[0] == 0:
            raise UsageError("Q must be a non-empty square matrix")
        if not np.all(np.isfinite(Q)):
            raise NotPositiveDefiniteError("Q has non-finite entries")
        scale = float(np.max(np.abs(Q)))
        if scale == 0.0:
            raise NotPositiveDefiniteError("Q is the zero matrix")
        if np.max(np.abs(Q - Q.T)) > SYMMETRY_RTOL * scale:
            raise NotPositiveDefiniteError("Q is not symmetric")
        Q = 0.5 * (Q + Q.T)
        try:
            C = np.linalg.cholesky(Q)
        except np.linalg.LinAlgError:
            raise NotPositiveDefiniteError("Q is not positive definite") from None
        if np.min(np.diag(C)) < PIVOT_RTOL * scale:
            raise NotPositiveDefiniteError("Q is numerically singular")
        self._dim = Q.shape[0]
        self._identity = bool(np.array_equal(Q, np.eye(self._dim)))
        self._Q = _frozen(Q)
        self._factor = _frozen(C)

    @classmethod
    def identity(cls, n):
        """Euclidean norm on R^n."""
        return cls(np.eye(int(n)))

    @classmethod
    def diagonal(cls, d):
        return cls(np.diag(np.asarray(d, dtype=np.float64)))

    @property
    def dim(self):
        return self._dim

    @property
    def Q(self):
        return self._Q

    @property
    def factor(self):
        """Lower-triangular ``C`` with ``C C^T = Q``."""
        return self._factor

    @property
    def is_identity(self):
        return self._identity

    def _check(self, v, name):
        v = np.asarray(v, dtype=np.float64)
        if v.ndim != 1 or v.size != self._dim:
            raise DimensionMismatchError(
                f"{name} has shape {v.shape}, norm has dimension {self._dim}"
            )
        return v

    def primal(self, x):
        x = self._check(x, "x")
        if self._identity:
            return math.sqrt(float(x @ x))
        w = self._factor.T @ x
        return math.sqrt(float(w @ w))

    def dual(self, u):
        u = self._check(u, "u")
        if self._identity:
            return math.sqrt(float(u @ u))
        w = solve_triangular(self._factor, u, lower=True, check_finite=False)
        return math.sqrt(float(w @ w))

    def apply(self, x):
        """Return ``Q x``."""
        x = self._check(x, "x")
        return x.copy() if self._identity else self._Q @ x

    def apply_inverse(self, u):
        """Return ``v`` solving ``Q v = u``."""
        u = self._check(u, "u")
        if self._identity:
            return u.copy()
        w = solve_triangular(self._factor, u, lower=True, check_finite=False)
        return solve_triangular(self._factor.T, w, lower=False, check_finite=False)

    def inner(self, x, y):
        """Return ``x^T Q y``."""
        x = self._check(x, "x")
        y = self._check(y, "y")
        return float(x @ y) if self._identity else float(x @ (self._Q @ y))

    def same_as(self, other):
        return other is self or (
            isinstance(other, QuadraticNorm)
            and other.dim == self._dim
            and np.array_equal(other.Q, self._Q)
        )

    def __repr__(self):
        kind = "identity" if self._identity else "general"
        return f"QuadraticNorm(dim={self._dim}, {kind})"


class BregmanGenerator:
    """Distance-generating function ``w(y) = ||y||^2 / (2t)``.

    For this family the divergence is ``V_x(y) = ||x - y||^2 / (2t)`` and the
    mirror step has the closed form ``z - t * alpha * Q^{-1} g``.
    """

    __slots__ = ("norm", "t")

    def __init__(self, norm: QuadraticNorm, t: float = 1.0):
        t = float(t)
        if not (0.0 < t <= 1.0) or not math.isfinite(t):
            raise UsageError(f"Bregman scale t must lie in (0, 1], got {t}")
        self.norm = norm
        self.t = t

    def divergence(self, x, y):
        d = np.asarray(x, dtype=np.float64) - np.asarray(y, dtype=np.float64)
        return self.norm.primal(d) ** 2 / (2.0 * self.t)

    def mirror_step(self, z, g, alpha):
        """Minimizer of ``V_z(u) + <alpha g, u>`` over ``u``."""
        return np.asarray(z, dtype=np.float64) - (self.t * alpha) * self.norm.apply_inverse(g)

    def __repr__(self):
        return f"BregmanGenerator(t={self.t}, norm={self.norm!r})"


def primal_norm(x, N: QuadraticNorm) -> float:
    return N.primal(x)


def dual_norm(u, N: QuadraticNorm) -> float:
    return N.dual(u)


def apply_inverse(u, N: QuadraticNorm) -> np.ndarray:
    return N.apply_inverse(u)


def bregman(x, y, B: BregmanGenerator) -> float:
    x = B.norm._check(x, "x")
    y = B.norm._check(y, "y")
    return B.divergence(x, y)
