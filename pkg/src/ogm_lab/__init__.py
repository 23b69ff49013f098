"""Optimized gradient method family with runtime convergence certificates.

Modules
-------
numkit
    Quadratic norms, dual norms and Bregman divergences.
problems
    Objective oracles (quadratic, log-sum-exp, logistic) and reference solutions.
schedules
    Parameter sequences theta, phi, gamma and linear-coupling weights.
methods
    One-step transitions for every method and the ``run`` driver.
certificates
    Lyapunov values, rate bounds and inequality audits along a trace.
benchcli
    The ``ogm-lab`` command line, CSV/SVG output and the acceptance suite.
"""
from .kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
