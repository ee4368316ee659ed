"""Likelihood-based estimation of the power parameter.

The power-transformed matrix ``L = (S**alpha - I) / alpha`` (``log S`` at
``alpha = 0``) is modelled as Gaussian in its ``m(m+1)/2`` distinct entries.
The identity shift does not change the Gaussian profile likelihood and makes
the transform continuous in ``alpha``; its Jacobian is that of ``S**alpha / alpha``:

    |dL/dS| = prod_i d_i**(alpha-1) * prod_{i<j} (d_i**alpha - d_j**alpha) / (alpha (d_i - d_j))

where ``d`` are the eigenvalues of ``S``. Profiling out the Gaussian mean and
covariance over a grid of ``alpha`` values gives the maximum likelihood
estimate and a likelihood-ratio confidence interval.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import stats

from .exceptions import AllPointsFailedError, DomainError, SingularSigmaError
from .spd import as_symmetric, psd_tolerance, spectral_decompose, vech, vech_dim

TAU_GAP = 1e-3
TAU_ALPHA = 1e-3
MAX_CONDITION = 1e12
LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class AlphaGrid:
    """Equally spaced grid ``lo, lo + step, ..., hi`` of power parameters.

    Points are rounded to 12 decimals so that e.g. ``0.3`` is hit exactly and
    anything within ``1e-12`` of zero becomes exactly zero.
    """

    lo: float = -0.1
    hi: float = 0.7
    step: float = 0.02

    def __post_init__(self):
        if not all(np.isfinite([self.lo, self.hi, self.step])):
            raise ValueError("grid bounds and step must be finite")
        if self.step <= 0:
            raise ValueError(f"grid step must be positive, got {self.step}")
        if self.lo > self.hi:
            raise ValueError(f"grid lo={self.lo} exceeds hi={self.hi}")

    @property
    def points(self):
        count = int(np.floor((self.hi - self.lo) / self.step + 1e-9)) + 1
        pts = np.round(self.lo + self.step * np.arange(count), 12)
        pts[np.abs(pts) < 1e-12] = 0.0
        return pts

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class GaussianParams:
    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        sigma = np.asarray(self.sigma, dtype=float)
        p = mu.shape[0]
        if mu.ndim != 1 or sigma.shape != (p, p):
            raise ValueError(f"incompatible shapes mu {mu.shape}, sigma {sigma.shape}")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)

    def cholesky(self):
        try:
            return np.linalg.cholesky(self.sigma)
        except np.linalg.LinAlgError as exc:
            raise SingularSigmaError("covariance is not positive definite") from exc


@dataclass(frozen=True)
class AlphaFit:
    """Outcome of a profile-likelihood sweep.

    ``loglik`` holds NaN at grid points where the Gaussian fit failed; those
    points take part in neither the maximisation nor the interval.
    """

    alphas: np.ndarray
    loglik: np.ndarray
    alpha_hat: float
    ci_lo: float
    ci_hi: float
    params_at_mle: GaussianParams
    n: int
    ci_drop: float = 2.0
    grid: Optional[AlphaGrid] = field(default=None, compare=False)

    @property
    def failed(self):
        return np.isnan(self.loglik)

    def covers(self, alpha):
        return self.ci_lo <= alpha <= self.ci_hi


def wilks_ci_drop(level=0.95):
    """Log-likelihood drop ``chi2_1(level) / 2`` (1.9207 at 95%)."""
    return stats.chi2.ppf(level, df=1) / 2.0


# eigenvalue ratio (la**alpha - lb**alpha) / (alpha (la - lb)) = la**(alpha-1) * g(alpha, mu)
# with mu = lb / la - 1


def _ratio_direct(mu, alpha):
    return np.expm1(alpha * np.log1p(mu)) / (alpha * mu)


def _ratio_gap_series(mu, alpha):
    a1 = alpha - 1.0
    return 1.0 + mu * a1 / 2.0 * (1.0 + mu * (alpha - 2.0) / 3.0 * (1.0 + mu * (alpha - 3.0) / 4.0))


def _ratio_alpha_series(mu, alpha):
    with np.errstate(invalid="ignore", divide="ignore"):
        ell = np.log1p(mu)
        ell_over_mu = np.where(mu == 0, 1.0, ell / np.where(mu == 0, 1.0, mu))
    a_ell = alpha * ell
    return ell_over_mu * (1.0 + a_ell / 2.0 * (1.0 + a_ell / 3.0 * (1.0 + a_ell / 4.0)))


def log_jacobian_ratio(lambda_a, lambda_b, alpha):
    r"""Stable ``log((lambda_a**alpha - lambda_b**alpha) / (alpha (lambda_a - lambda_b)))``.

    Writing :math:`\mu = \lambda_b/\lambda_a - 1`, the ratio equals
    :math:`\lambda_a^{\alpha-1}((1+\mu)^\alpha - 1)/(\alpha\mu)`. Three branches:

    * ``|alpha| < TAU_ALPHA``: third-order series in ``alpha`` (exact at
      ``alpha = 0``, where the ratio is ``(log la - log lb) / (la - lb)``);
    * ``|mu| < TAU_GAP``: third-order series in the relative eigenvalue gap
      (exact at ``mu = 0``, where the ratio is ``la**(alpha-1)``);
    * otherwise the closed form via ``expm1``/``log1p``.

    Broadcasts over array inputs.
    """
    la = np.asarray(lambda_a, dtype=float)
    lb = np.asarray(lambda_b, dtype=float)
    if np.any(la <= 0) or np.any(lb <= 0):
        raise DomainError("eigenvalues must be strictly positive")
    alpha = float(alpha)
    if alpha == 1.0:
        return np.zeros(np.broadcast(la, lb).shape)[()]
    mu = lb / la - 1.0
    if abs(alpha) < TAU_ALPHA:
        g = _ratio_alpha_series(mu, alpha)
    else:
        gap = np.abs(mu) < TAU_GAP
        safe_mu = np.where(gap, 1.0, mu)
        g = np.where(gap, _ratio_gap_series(mu, alpha), _ratio_direct(safe_mu, alpha))
    return ((alpha - 1.0) * np.log(la) + np.log(g))[()]


def log_jacobian(eigenvalues, alpha):
    """Log-determinant of the derivative of ``vech(S) -> vech(L)``.

    Parameters
    ----------
    eigenvalues : array_like, shape (..., m)
        Strictly positive eigenvalues of ``S``.
    alpha : float

    Returns
    -------
    float or ndarray, shape (...)
    """
    d = np.asarray(eigenvalues, dtype=float)
    if np.any(d <= 0):
        raise DomainError("eigenvalues must be strictly positive")
    alpha = float(alpha)
    if alpha == 1.0:
        return np.zeros(d.shape[:-1])[()]
    i, j = np.triu_indices(d.shape[-1], 1)
    total = (alpha - 1.0) * np.log(d).sum(axis=-1)
    if len(i):
        total = total + log_jacobian_ratio(d[..., i], d[..., j], alpha).sum(axis=-1)
    return total[()]


def _transform_eigenvalues(d, alpha):
    if alpha == 0:
        return np.log(d)
    return np.expm1(alpha * np.log(d)) / alpha


def power_transform(S, alpha, decomp=None):
    """Box-Cox style matrix transform ``(S**alpha - I) / alpha``, ``log S`` at ``alpha = 0``.

    Requires positive definite input. Returns matrices of the same shape.
    """
    if decomp is None:
        decomp = _pd_decompose(S)
    U = decomp.eigenvectors
    h = _transform_eigenvalues(decomp.eigenvalues, float(alpha))
    return (U * h[..., None, :]) @ np.swapaxes(U, -1, -2)


def inverse_power_transform(L, alpha):
    """Inverse of :func:`power_transform`; ``I + alpha L`` must be positive definite."""
    L = as_symmetric(L, "L")
    decomp = spectral_decompose(L)
    alpha = float(alpha)
    if alpha == 0:
        vals = np.exp(decomp.eigenvalues)
    else:
        base = 1.0 + alpha * decomp.eigenvalues
        if np.any(base <= 0):
            raise DomainError("I + alpha * L is not positive definite")
        vals = np.exp(np.log(base) / alpha)
    U = decomp.eigenvectors
    return (U * vals[..., None, :]) @ np.swapaxes(U, -1, -2)


def _pd_decompose(S):
    decomp = spectral_decompose(S)
    lam = decomp.eigenvalues
    bad = lam <= psd_tolerance(lam)[..., None]
    if bad.any():
        offending = float(lam[bad].flat[0])
        raise DomainError(
            f"density requires positive definite matrices; found eigenvalue {offending:.6g}",
            eigenvalue=offending,
        )
    return decomp


def log_density_S(S, alpha, params, decomp=None):
    """Log-density of ``S`` when ``vech(L)`` is Gaussian with ``params``.

    Gaussian log-density of the transformed matrix plus :func:`log_jacobian`.
    Accepts one matrix or a stack and returns one value per matrix.
    """
    if decomp is None:
        decomp = _pd_decompose(S)
    alpha = float(alpha)
    V = vech(power_transform(None, alpha, decomp=decomp))
    chol = params.cholesky()
    p = params.mu.shape[0]
    if V.shape[-1] != p:
        raise ValueError(f"params have dimension {p}, matrices give {V.shape[-1]}")
    resid = np.atleast_2d(V - params.mu)
    z = np.linalg.solve(chol, resid.T)
    logdet = 2.0 * np.log(np.diag(chol)).sum()
    gauss = -0.5 * (p * LOG_2PI + logdet + np.sum(z * z, axis=0))
    out = gauss.reshape(V.shape[:-1]) + log_jacobian(decomp.eigenvalues, alpha)
    return out[()]


def gaussian_profile_loglik(V):
    """Maximised Gaussian log-likelihood of the rows of ``V`` and the MLEs.

    The covariance MLE uses divisor ``n``. Raises
    :class:`SingularSigmaError` when its condition number exceeds
    ``MAX_CONDITION``.
    """
    n, p = V.shape
    mu = V.mean(axis=0)
    R = V - mu
    sigma = R.T @ R / n
    ev = np.linalg.eigvalsh(sigma)
    if ev[0] <= 0 or ev[-1] > MAX_CONDITION * ev[0]:
        raise SingularSigmaError("sample covariance of the transformed matrices is singular")
    logdet = np.log(ev).sum()
    loglik = -0.5 * n * (p * LOG_2PI + logdet + p)
    return loglik, GaussianParams(mu, sigma)


def _check_sample(samples):
    X = as_symmetric(np.asarray(samples, dtype=float), "samples")
    if X.ndim != 3:
        raise ValueError(f"samples must have shape (n, m, m), got {X.shape}")
    n, m = X.shape[0], X.shape[-1]
    if n <= vech_dim(m):
        raise ValueError(f"need more than m(m+1)/2 = {vech_dim(m)} samples, got {n}")
    return X


def _profile_from_decomp(decomp, alpha):
    V = vech(power_transform(None, alpha, decomp=decomp))
    loglik, params = gaussian_profile_loglik(V)
    return loglik + log_jacobian(decomp.eigenvalues, alpha).sum(), params


def profile_loglik(samples, alpha, decomp=None):
    """Profile log-likelihood at ``alpha`` with the Gaussian parameters at their MLEs.

    Parameters
    ----------
    samples : array_like, shape (n, m, m)
        Positive definite matrices, ``n > m(m+1)/2``.
    alpha : float
    decomp : SpectralDecomp, optional
        Precomputed decomposition of ``samples``.

    Returns
    -------
    loglik : float
    params : GaussianParams
    """
    if decomp is None:
        decomp = _pd_decompose(_check_sample(samples))
    return _profile_from_decomp(decomp, float(alpha))


def _select_mle(alphas, loglik):
    best = np.nanmax(loglik)
    candidates = np.flatnonzero(loglik == best)
    # prefer the point closest to 0, then the smaller alpha
    key = sorted(candidates, key=lambda k: (abs(alphas[k]), alphas[k]))
    return key[0]


def fit_alpha(samples, grid=None, ci_drop=2.0, n_jobs=None):
    """Profile-likelihood estimate and confidence interval for the power parameter.

    Parameters
    ----------
    samples : array_like, shape (n, m, m)
        Positive definite matrices, ``n > m(m+1)/2``.
    grid : AlphaGrid or array_like, optional
        Candidate values; defaults to ``[-0.1, 0.7]`` in steps of ``0.02``.
    ci_drop : float, default 2.0
        Grid points whose profile log-likelihood lies within ``ci_drop`` of
        the maximum form the confidence interval. ``wilks_ci_drop()`` gives
        the asymptotically exact 95% value.
    n_jobs : int, optional
        Threads used to evaluate grid points. Results do not depend on it.

    Returns
    -------
    AlphaFit
    """
    if grid is None:
        grid = AlphaGrid()
    if isinstance(grid, AlphaGrid):
        alphas = grid.points
    else:
        alphas = np.atleast_1d(np.asarray(grid, dtype=float))
        grid = None
    if alphas.size == 0:
        raise ValueError("alpha grid is empty")
    if not ci_drop > 0:
        raise ValueError("ci_drop must be positive")
    decomp = _pd_decompose(_check_sample(samples))

    def evaluate(alpha):
        try:
            return _profile_from_decomp(decomp, alpha)
        except SingularSigmaError:
            return np.nan, None

    if n_jobs is not None and n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(evaluate, alphas))
    else:
        results = [evaluate(a) for a in alphas]

    loglik = np.array([r[0] for r in results], dtype=float)
    loglik[~np.isfinite(loglik)] = np.nan
    if np.all(np.isnan(loglik)):
        raise AllPointsFailedError("no grid point produced a valid profile likelihood")
    k = _select_mle(alphas, loglik)
    inside = alphas[loglik >= loglik[k] - ci_drop]
    return AlphaFit(
        alphas=alphas,
        loglik=loglik,
        alpha_hat=float(alphas[k]),
        ci_lo=float(inside.min()),
        ci_hi=float(inside.max()),
        params_at_mle=results[k][1],
        n=int(decomp.eigenvalues.shape[0]),
        ci_drop=float(ci_drop),
        grid=grid,
    )
