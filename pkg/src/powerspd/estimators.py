"""scikit-learn compatible estimators.

Inputs are stacks of symmetric matrices with shape ``(n_samples, m, m)``.
"""
import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .likelihood import (
    AlphaGrid,
    fit_alpha,
    inverse_power_transform,
    log_density_S,
    power_transform,
)
from .metrics import dist_power
from .spd import as_symmetric, unvech, vech
from .stats import frechet_mean


def check_matrices(X, *, min_samples=1):
    """Validate a stack of symmetric matrices and return it as floats."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 2 and X.shape[0] == X.shape[1]:
        X = X[None]
    if X.ndim != 3:
        raise ValueError(f"expected an array of shape (n_samples, m, m), got {X.shape}")
    if X.shape[0] < min_samples:
        raise ValueError(f"need at least {min_samples} samples, got {X.shape[0]}")
    return as_symmetric(X, "X")


class PowerEuclideanTransformer(TransformerMixin, BaseEstimator):
    """Map matrices to the flat coordinates of a power-Euclidean metric.

    ``transform`` returns ``vech((S**alpha - I) / alpha)`` (``vech(log S)``
    at ``alpha = 0``), one row per matrix.

    Parameters
    ----------
    alpha : float, default=0.5
    """

    def __init__(self, alpha=0.5):
        self.alpha = alpha

    def fit(self, X, y=None):
        X = check_matrices(X)
        self.dim_ = X.shape[-1]
        return self

    def transform(self, X):
        check_is_fitted(self, "dim_")
        X = check_matrices(X)
        if X.shape[-1] != self.dim_:
            raise ValueError(f"fitted on {self.dim_}x{self.dim_} matrices, got {X.shape[-1]}")
        return vech(power_transform(X, self.alpha))

    def inverse_transform(self, Z):
        check_is_fitted(self, "dim_")
        return inverse_power_transform(unvech(np.atleast_2d(Z), self.dim_), self.alpha)


class PowerAlphaEstimator(TransformerMixin, BaseEstimator):
    """Maximum profile-likelihood choice of the power parameter.

    Parameters
    ----------
    alpha_min, alpha_max, alpha_step : float
        Evaluation grid.
    ci_drop : float, default=2.0
        Log-likelihood drop defining the confidence interval.
    n_jobs : int, optional
        Threads for the grid sweep.

    Attributes
    ----------
    alpha_ : float
    ci_ : tuple of float
    alphas_, loglik_ : ndarray
        Grid and profile log-likelihood (NaN where the fit failed).
    mean_, covariance_ : ndarray
        Gaussian MLEs of the transformed matrices at ``alpha_``.
    fit_ : AlphaFit
    """

    def __init__(self, alpha_min=-0.1, alpha_max=0.7, alpha_step=0.02, ci_drop=2.0, n_jobs=None):
        self.alpha_min = alpha_min
        self.alpha_max = alpha_max
        self.alpha_step = alpha_step
        self.ci_drop = ci_drop
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        X = check_matrices(X)
        grid = AlphaGrid(self.alpha_min, self.alpha_max, self.alpha_step)
        fit = fit_alpha(X, grid, ci_drop=self.ci_drop, n_jobs=self.n_jobs)
        self.fit_ = fit
        self.dim_ = X.shape[-1]
        self.alpha_ = fit.alpha_hat
        self.ci_ = (fit.ci_lo, fit.ci_hi)
        self.alphas_ = fit.alphas
        self.loglik_ = fit.loglik
        self.mean_ = fit.params_at_mle.mu
        self.covariance_ = fit.params_at_mle.sigma
        return self

    def transform(self, X):
        check_is_fitted(self, "alpha_")
        return vech(power_transform(check_matrices(X), self.alpha_))

    def score_samples(self, X):
        check_is_fitted(self, "alpha_")
        return np.atleast_1d(log_density_S(check_matrices(X), self.alpha_, self.fit_.params_at_mle))

    def score(self, X, y=None):
        """Mean log-density of ``X`` under the fitted model."""
        return float(np.mean(self.score_samples(X)))


class FrechetMean(BaseEstimator):
    """Fréchet mean under the power-Euclidean distance.

    ``transform`` returns each matrix's distance to the fitted mean.
    """

    def __init__(self, alpha=0.5):
        self.alpha = alpha

    def fit(self, X, y=None):
        result = frechet_mean(check_matrices(X), self.alpha)
        self.mean_ = result.mean
        self.n_samples_ = result.n
        return self

    def transform(self, X):
        check_is_fitted(self, "mean_")
        return np.atleast_1d(dist_power(check_matrices(X), self.mean_, self.alpha))[:, None]

    def fit_transform(self, X, y=None):
        return self.fit(X).transform(X)
