import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_spd
from ogm_lab.errors import DimensionMismatchError, NotPositiveDefiniteError, UsageError
from ogm_lab.numkit import (
    BregmanGenerator,
    QuadraticNorm,
    apply_inverse,
    bregman,
    dual_norm,
    primal_norm,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)
dims = st.integers(min_value=1, max_value=16)


def test_primal_norm_examples():
    assert primal_norm(np.zeros(5), QuadraticNorm.identity(5)) == 0.0
    assert primal_norm([3.0, 4.0], QuadraticNorm.identity(2)) == 5.0
    assert primal_norm([1.0, 1.0], QuadraticNorm.diagonal([2.0, 1.0])) == pytest.approx(math.sqrt(3.0), rel=1e-15)


def test_dual_norm_examples():
    assert dual_norm([3.0, 4.0], QuadraticNorm.identity(2)) == 5.0
    assert dual_norm([2.0, 0.0], QuadraticNorm.diagonal([2.0, 1.0])) == pytest.approx(math.sqrt(2.0), rel=1e-15)
    N = QuadraticNorm(random_spd(np.random.default_rng(0), 4))
    assert dual_norm(np.zeros(4), N) == 0.0


def test_apply_inverse_examples():
    np.testing.assert_array_equal(apply_inverse([1.0, 2.0], QuadraticNorm.identity(2)), [1.0, 2.0])
    np.testing.assert_allclose(apply_inverse([2.0, 4.0], QuadraticNorm.diagonal([2.0, 4.0])), [1.0, 1.0])
    N = QuadraticNorm(random_spd(np.random.default_rng(1), 3))
    np.testing.assert_array_equal(apply_inverse(np.zeros(3), N), np.zeros(3))


def test_bregman_examples():
    B1 = BregmanGenerator(QuadraticNorm.identity(2), 1.0)
    assert bregman([1.0, 2.0], [1.0, 2.0], B1) == 0.0
    assert bregman([0.0, 0.0], [3.0, 4.0], B1) == 12.5
    assert bregman([0.0, 0.0], [1.0, 0.0], BregmanGenerator(QuadraticNorm.identity(2), 0.5)) == 1.0


def test_dimension_mismatch():
    N = QuadraticNorm.identity(3)
    for fn in (primal_norm, dual_norm, apply_inverse):
        with pytest.raises(DimensionMismatchError):
            fn(np.ones(2), N)
    with pytest.raises(DimensionMismatchError):
        bregman(np.ones(3), np.ones(2), BregmanGenerator(N))


def test_rejects_bad_matrices():
    with pytest.raises(NotPositiveDefiniteError):
        QuadraticNorm(np.diag([1.0, -1.0]))
    with pytest.raises(NotPositiveDefiniteError):
        QuadraticNorm(np.diag([1.0, 1e-26]))
    with pytest.raises(UsageError):
        QuadraticNorm(np.array([[1.0, 0.5], [0.0, 1.0]]))
    with pytest.raises(UsageError):
        BregmanGenerator(QuadraticNorm.identity(2), 1.5)
    with pytest.raises(UsageError):
        BregmanGenerator(QuadraticNorm.identity(2), 0.0)


def test_norm_is_immutable():
    N = QuadraticNorm(np.diag([1.0, 2.0]))
    with pytest.raises(ValueError):
        N.Q[0, 0] = 5.0


@given(seeds, dims)
def test_dual_norm_matches_dense_inverse(seed, n):
    rng = np.random.default_rng(seed)
    Q = random_spd(rng, n)
    u = rng.standard_normal(n)
    oracle = math.sqrt(u @ np.linalg.inv(Q) @ u)
    assert dual_norm(u, QuadraticNorm(Q)) == pytest.approx(oracle, rel=1e-9)


@given(seeds, dims)
def test_apply_inverse_residual(seed, n):
    rng = np.random.default_rng(seed)
    Q = random_spd(rng, n, cond=1e4)
    u = rng.standard_normal(n)
    v = QuadraticNorm(Q).apply_inverse(u)
    assert np.linalg.norm(Q @ v - u) <= 1e-10 * np.linalg.norm(u)


@given(seeds, dims)
def test_generalized_cauchy_schwarz(seed, n):
    rng = np.random.default_rng(seed)
    N = QuadraticNorm(random_spd(rng, n))
    x, u = rng.standard_normal(n), rng.standard_normal(n)
    assert u @ x <= N.primal(x) * N.dual(u) + 1e-10
    # equality on the aligned pair (x, Qx)
    lhs = N.primal(x) * N.dual(N.apply(x))
    assert lhs == pytest.approx(abs(x @ N.Q @ x), rel=1e-10)


@given(seeds, dims, st.floats(min_value=1e-3, max_value=1.0))
def test_bregman_symmetric_and_dominates_half_norm(seed, n, t):
    rng = np.random.default_rng(seed)
    N = QuadraticNorm(random_spd(rng, n))
    B = BregmanGenerator(N, t)
    x, y = rng.standard_normal(n), rng.standard_normal(n)
    assert B.divergence(x, y) == pytest.approx(B.divergence(y, x), rel=1e-14)
    assert B.divergence(x, y) >= 0.5 * N.primal(x - y) ** 2 - 1e-12


@given(seeds, dims)
def test_primal_norm_zero_iff_zero(seed, n):
    rng = np.random.default_rng(seed)
    N = QuadraticNorm(random_spd(rng, n))
    x = rng.standard_normal(n)
    assert N.primal(x) > 0.0
    assert N.primal(np.zeros(n)) == 0.0


def test_mirror_step_is_preconditioned():
    N = QuadraticNorm.diagonal([2.0, 4.0])
    B = BregmanGenerator(N, 0.5)
    z = B.mirror_step(np.zeros(2), np.array([2.0, 4.0]), 3.0)
    np.testing.assert_allclose(z, [-1.5, -1.5])
