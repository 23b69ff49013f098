import importlib

import numpy as np
import pytest

from ogm_lab import _pykernels, kernels

ck = pytest.importorskip("ogm_lab._ckernels")


def test_theta_sweep_bitwise_equal():
    a = ck.theta_sweep(5000)
    b = _pykernels.theta_sweep(5000)
    for u, v in zip(a, b):
        assert np.array_equal(u, v)


def test_update_kernels_bitwise_equal():
    rng = np.random.default_rng(3)
    x, d, z, yp = (rng.standard_normal(7) for _ in range(4))
    for args in ((0.3, 1.0, 0.0, 0.7, 0.4), (0.1, 0.2, 0.8, 1.3, 0.33)):
        for u, v in zip(ck.couple(x, d, z, *args), _pykernels.couple(x, d, z, *args)):
            assert np.array_equal(u, v)
    for u, v in zip(ck.momentum(x, d, yp, 0.5, 0.2, 0.9), _pykernels.momentum(x, d, yp, 0.5, 0.2, 0.9)):
        assert np.array_equal(u, v)


def test_couple_formula():
    x, d, z = np.array([1.0, 2.0]), np.array([0.5, -1.0]), np.array([3.0, 0.0])
    y, z1, x1 = _pykernels.couple(x, d, z, 0.5, 0.25, 0.75, 2.0, 0.4)
    np.testing.assert_allclose(y, x - 0.5 * d)
    np.testing.assert_allclose(z1, 0.25 * z + 0.75 * x - 2.0 * d)
    np.testing.assert_allclose(x1, 0.6 * y + 0.4 * z1)


def test_pure_python_switch(monkeypatch):
    monkeypatch.setenv("OGM_LAB_PURE_PYTHON", "1")
    mod = importlib.reload(kernels)
    try:
        assert mod.BACKEND == "python"
    finally:
        monkeypatch.delenv("OGM_LAB_PURE_PYTHON")
        importlib.reload(kernels)
