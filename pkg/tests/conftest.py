import numpy as np
import pytest


def random_rotation(rng, m):
    Q, R = np.linalg.qr(rng.standard_normal((m, m)))
    return Q * np.sign(np.diag(R))


def random_spd(rng, m=3, lo=0.1, hi=10.0, size=None):
    """SPD matrices with eigenvalues drawn log-uniformly from [lo, hi]."""
    if size is None:
        lam = np.exp(rng.uniform(np.log(lo), np.log(hi), m))
        Q = random_rotation(rng, m)
        return (Q * lam) @ Q.T
    return np.array([random_spd(rng, m, lo, hi) for _ in range(size)])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
