"""Fréchet means, power fractional anisotropy and power-space interpolation."""
from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateError, EmptyInputError
from .spd import (
    as_symmetric,
    check_power_domain,
    matrix_exp,
    matrix_log,
    matrix_power,
    spectral_decompose,
)


@dataclass(frozen=True)
class FrechetMeanResult:
    mean: np.ndarray
    alpha: float
    n: int


def _as_sample(samples):
    if len(samples) == 0:
        raise EmptyInputError("cannot average an empty sample")
    X = as_symmetric(np.asarray(samples, dtype=float), "samples")
    if X.ndim != 3:
        raise ValueError(f"samples must have shape (n, m, m), got {X.shape}")
    return X


def frechet_mean(samples, alpha):
    r"""Sample Fréchet mean under the power-Euclidean distance.

    The power metric is Euclidean in the coordinates :math:`S^\alpha`, so the
    minimiser of :math:`\sum_i d_\alpha(S_i, \Sigma)^2` is

    .. math:: \hat\Sigma = \Big(\frac{1}{n}\sum_i S_i^\alpha\Big)^{1/\alpha},

    and :math:`\exp(\frac{1}{n}\sum_i \log S_i)` when ``alpha = 0``.

    Parameters
    ----------
    samples : array_like, shape (n, m, m)
    alpha : float
        Negative and zero powers require every sample to be positive definite.

    Returns
    -------
    FrechetMeanResult
    """
    X = _as_sample(samples)
    alpha = float(alpha)
    if alpha == 0:
        mean = matrix_exp(matrix_log(X).mean(axis=0))
    else:
        mean = matrix_power(matrix_power(X, alpha).mean(axis=0), 1.0 / alpha)
    return FrechetMeanResult(mean=mean, alpha=alpha, n=X.shape[0])


def fractional_anisotropy(S, alpha):
    r"""Fractional anisotropy of the powered eigenvalues.

    .. math::
        FA(\alpha) = \Big\{\frac{m}{m-1}
        \frac{\sum_i (\lambda_i^\alpha - \overline{\lambda^\alpha})^2}
             {\sum_i \lambda_i^{2\alpha}}\Big\}^{1/2}

    The value lies in ``[0, 1]``; rounding overshoot past 1 is clipped. At
    ``alpha = 0`` every powered eigenvalue equals one and the result is 0,
    which is also the limit as ``alpha -> 0``.
    """
    S = as_symmetric(S)
    m = S.shape[-1]
    if m < 2:
        raise DegenerateError("fractional anisotropy needs m >= 2")
    alpha = float(alpha)
    lam = check_power_domain(spectral_decompose(S).eigenvalues, alpha)
    # alpha = 0 gives lambda**0 = 1 and FA = 0, the continuous limit
    powered = lam ** alpha
    denom = np.sum(powered ** 2, axis=-1)
    if np.any(denom == 0):
        raise DegenerateError("all powered eigenvalues are zero")
    centred = powered - powered.mean(axis=-1, keepdims=True)
    fa = np.sqrt(m / (m - 1) * np.sum(centred ** 2, axis=-1) / denom)
    return np.minimum(fa, 1.0)


def interpolate(S1, S2, t, alpha):
    """Point at fraction ``t`` of the straight line between ``S1`` and ``S2`` in power coordinates.

    Extrapolation is refused since it can leave the positive semi-definite cone.
    """
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    S1, S2 = as_symmetric(S1, "S1"), as_symmetric(S2, "S2")
    alpha = float(alpha)
    if alpha == 0:
        return matrix_exp((1 - t) * matrix_log(S1) + t * matrix_log(S2))
    if t == 0.0:
        return S1.copy()
    if t == 1.0:
        return S2.copy()
    mix = (1 - t) * matrix_power(S1, alpha) + t * matrix_power(S2, alpha)
    return matrix_power(mix, 1.0 / alpha)
