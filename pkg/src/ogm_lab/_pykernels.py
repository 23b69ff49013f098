"""Pure-Python twin of the compiled kernels (same operation order)."""
import math

import numpy as np


def theta_sweep(n):
    n = int(n)
    if n < 0:
        raise ValueError("n must be non-negative")
    th = np.empty(n + 1)
    ex = np.empty(n + 1)
    et = np.empty(n + 1)
    s = c = 0.0
    tk = 1.0
    th[0] = 1.0
    ex[0] = 0.0
    sqrt = math.sqrt
    for k in range(n + 1):
        e = 0.5 / (sqrt(1.0 + 4.0 * tk * tk) + 2.0 * tk)
        et[k] = e
        if k == n:
            break
        t = s + e
        if abs(s) >= abs(e):
            c += (s - t) + e
        else:
            c += (e - t) + s
        s = t
        acc = s + c
        tk = (1.0 + 0.5 * float(k + 1)) + acc
        th[k + 1] = tk
        ex[k + 1] = acc
    return th, ex, et


def couple(x, d, z, step_y, cz, cx, step_z, tau):
    x = np.ascontiguousarray(x, dtype=np.float64)
    d = np.ascontiguousarray(d, dtype=np.float64)
    z = np.ascontiguousarray(z, dtype=np.float64)
    if d.shape != x.shape or z.shape != x.shape:
        raise ValueError("dimension mismatch")
    y_new = x - step_y * d
    z_new = (cz * z + cx * x) - step_z * d
    x_new = (1.0 - tau) * y_new + tau * z_new
    return y_new, z_new, x_new


def momentum(x, d, y_prev, step_y, a, b):
    x = np.ascontiguousarray(x, dtype=np.float64)
    d = np.ascontiguousarray(d, dtype=np.float64)
    y_prev = np.ascontiguousarray(y_prev, dtype=np.float64)
    if d.shape != x.shape or y_prev.shape != x.shape:
        raise ValueError("dimension mismatch")
    y_new = x - step_y * d
    x_new = (y_new + a * (y_new - y_prev)) + b * (y_new - x)
    return y_new, x_new
