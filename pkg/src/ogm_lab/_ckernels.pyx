# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops; ``_pykernels`` is the reference twin.

Both modules perform the same IEEE operations in the same order, so their
results agree bit for bit (the extension is built with FP contraction off).
"""
import numpy as np

from libc.math cimport sqrt, fabs


def theta_sweep(Py_ssize_t n):
    """Exact theta recurrence up to index ``n``.

    Returns
    -------
    theta : ndarray, shape (n + 1,)
    excess : ndarray, shape (n + 1,)
        ``S_k = theta_k - 1 - k/2`` accumulated with Neumaier summation.
    eta : ndarray, shape (n + 1,)
        Increments ``eta_k = S_{k+1} - S_k``.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    theta_arr = np.empty(n + 1, dtype=np.float64)
    excess_arr = np.empty(n + 1, dtype=np.float64)
    eta_arr = np.empty(n + 1, dtype=np.float64)
    cdef double[::1] th = theta_arr
    cdef double[::1] ex = excess_arr
    cdef double[::1] et = eta_arr
    cdef double s = 0.0, c = 0.0, tk = 1.0, e, t, acc
    cdef Py_ssize_t k
    th[0] = 1.0
    ex[0] = 0.0
    for k in range(n + 1):
        e = 0.5 / (sqrt(1.0 + 4.0 * tk * tk) + 2.0 * tk)
        et[k] = e
        if k == n:
            break
        t = s + e
        if fabs(s) >= fabs(e):
            c += (s - t) + e
        else:
            c += (e - t) + s
        s = t
        acc = s + c
        tk = (1.0 + 0.5 * <double>(k + 1)) + acc
        th[k + 1] = tk
        ex[k + 1] = acc
    return theta_arr, excess_arr, eta_arr


def couple(const double[::1] x, const double[::1] d, const double[::1] z,
           double step_y, double cz, double cx, double step_z, double tau):
    """Gradient step, mirror step and convex combination in one pass.

    ``y+ = x - step_y d``, ``z+ = cz z + cx x - step_z d``,
    ``x+ = (1 - tau) y+ + tau z+``.
    """
    cdef Py_ssize_t i, n = x.shape[0]
    if d.shape[0] != n or z.shape[0] != n:
        raise ValueError("dimension mismatch")
    y_arr = np.empty(n, dtype=np.float64)
    z_arr = np.empty(n, dtype=np.float64)
    x_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] yo = y_arr
    cdef double[::1] zo = z_arr
    cdef double[::1] xo = x_arr
    cdef double w = 1.0 - tau, yi, zi
    for i in range(n):
        yi = x[i] - step_y * d[i]
        zi = (cz * z[i] + cx * x[i]) - step_z * d[i]
        yo[i] = yi
        zo[i] = zi
        xo[i] = w * yi + tau * zi
    return y_arr, z_arr, x_arr


def momentum(const double[::1] x, const double[::1] d, const double[::1] y_prev,
             double step_y, double a, double b):
    """``y+ = x - step_y d``, ``x+ = y+ + a (y+ - y_prev) + b (y+ - x)``."""
    cdef Py_ssize_t i, n = x.shape[0]
    if d.shape[0] != n or y_prev.shape[0] != n:
        raise ValueError("dimension mismatch")
    y_arr = np.empty(n, dtype=np.float64)
    x_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] yo = y_arr
    cdef double[::1] xo = x_arr
    cdef double yi
    for i in range(n):
        yi = x[i] - step_y * d[i]
        yo[i] = yi
        xo[i] = (yi + a * (yi - y_prev[i])) + b * (yi - x[i])
    return y_arr, x_arr
