"""Brute-force reference computations used by the tests.

These use numpy's LAPACK eigensolver rather than the package's own kernel.
"""
import numpy as np
from scipy import optimize


def _chol_to_spd(theta, m):
    Lc = np.zeros((m, m))
    Lc[np.tril_indices(m)] = theta
    d = np.diag_indices(m)
    Lc[d] = np.exp(Lc[d])
    return Lc @ Lc.T


def _spd_to_chol(S):
    Lc = np.linalg.cholesky(S)
    Lc[np.diag_indices(len(S))] = np.log(np.diag(Lc))
    return Lc[np.tril_indices(len(S))]


def lapack_power(S, alpha):
    w, V = np.linalg.eigh(S)
    f = np.log(w) if alpha == 0 else w ** alpha
    return (V * f[..., None, :]) @ np.swapaxes(V, -1, -2)


def brute_force_frechet_mean(samples, alpha):
    """Minimise the sum of squared power distances numerically.

    Searches over positive definite matrices through a log-Cholesky
    parameterisation, starting from the arithmetic mean.
    """
    samples = np.asarray(samples)
    m = samples.shape[-1]
    coords = lapack_power(samples, alpha)
    scale = 1.0 if alpha == 0 else alpha ** 2

    def objective(theta):
        if np.abs(theta).max() > 30:
            return 1e300
        return np.sum((coords - lapack_power(_chol_to_spd(theta, m), alpha)) ** 2) / scale

    res = optimize.minimize(objective, _spd_to_chol(samples.mean(axis=0)), method="BFGS",
                            options={"gtol": 1e-10, "maxiter": 500})
    # Gauss-Newton polish on the residuals for the last few digits
    def residuals(theta):
        return (coords - lapack_power(_chol_to_spd(theta, m), alpha)).ravel() / np.sqrt(scale)

    res = optimize.least_squares(residuals, res.x, xtol=1e-15, ftol=1e-15, gtol=1e-15)
    return _chol_to_spd(res.x, m)


def _o2(theta, reflect):
    c, s = np.cos(theta), np.sin(theta)
    R = np.array([[c, -s], [s, c]])
    return R @ np.diag([1.0, -1.0]) if reflect else R


def brute_force_procrustes_2x2(S1, S2, alpha):
    """Minimum of ``||S1^a - S2^a R|| / |a|`` over O(2): dense angle scan, then refinement."""
    A, B = lapack_power(S1, alpha), lapack_power(S2, alpha)
    grid = np.linspace(-np.pi, np.pi, 20001)
    best = np.inf
    for reflect in (False, True):
        def f(t):
            return np.linalg.norm(A - B @ _o2(t, reflect)) / abs(alpha)
        values = np.array([f(t) for t in grid])
        k = int(np.argmin(values))
        res = optimize.minimize_scalar(f, bounds=(grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]),
                                       method="bounded", options={"xatol": 1e-12})
        best = min(best, res.fun, values[k])
    return best


def numerical_log_jacobian(S, transform, h=1e-6):
    """log|det| of the central-difference derivative of vech(S) -> vech(transform(S))."""
    m = S.shape[0]
    iu = np.triu_indices(m)
    p = len(iu[0])
    J = np.empty((p, p))
    for k in range(p):
        E = np.zeros((m, m))
        E[iu[0][k], iu[1][k]] = E[iu[1][k], iu[0][k]] = 1.0
        J[:, k] = (transform(S + h * E) - transform(S - h * E))[iu] / (2 * h)
    return np.linalg.slogdet(J)[1]
