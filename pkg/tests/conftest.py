import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ogm_lab.numkit import QuadraticNorm
from ogm_lab.problems import quadratic_oracle

settings.register_profile(
    "repo", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")


def random_spd(rng, n, cond=50.0):
    U, _ = np.linalg.qr(rng.standard_normal((n, n)))
    lam = np.geomspace(1.0, cond, n)
    return (U * lam) @ U.T


def diag_quadratic(diag, b=None, Q=None):
    A = np.diag(np.asarray(diag, dtype=float))
    b = np.zeros(len(diag)) if b is None else np.asarray(b, dtype=float)
    norm = QuadraticNorm.identity(len(diag)) if Q is None else Q
    return quadratic_oracle(A, b, norm)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
