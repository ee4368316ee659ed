"""Distances between symmetric positive (semi-)definite matrices."""
import numpy as np

from .spd import as_symmetric, matrix_log, matrix_power


def frobenius_norm(S):
    """Frobenius norm over the full matrix (off-diagonal entries count twice)."""
    S = np.asarray(S, dtype=float)
    return np.sqrt(np.sum(S * S, axis=(-2, -1)))


def dist_log_euclidean(S1, S2):
    r"""Log-Euclidean distance :math:`\|\log S_1 - \log S_2\|_F`.

    Both inputs must be positive definite.
    """
    S1, S2 = as_symmetric(S1, "S1"), as_symmetric(S2, "S2")
    return frobenius_norm(matrix_log(S1) - matrix_log(S2))


def dist_power(S1, S2, alpha):
    r"""Power-Euclidean distance :math:`\frac{1}{|\alpha|}\|S_1^\alpha - S_2^\alpha\|_F`.

    ``alpha = 0`` selects the log-Euclidean distance, which is the limit of
    the family as ``alpha -> 0``.

    Parameters
    ----------
    S1, S2 : array_like, shape (..., m, m)
        Symmetric matrices, positive definite when ``alpha <= 0`` and
        positive semi-definite otherwise.
    alpha : float
        Power parameter.

    Returns
    -------
    float or ndarray
        Non-negative distance (broadcast over stacked inputs).
    """
    alpha = float(alpha)
    if alpha == 0:
        return dist_log_euclidean(S1, S2)
    S1, S2 = as_symmetric(S1, "S1"), as_symmetric(S2, "S2")
    return frobenius_norm(matrix_power(S1, alpha) - matrix_power(S2, alpha)) / abs(alpha)


def procrustes_rotation(A, B):
    """Orthogonal ``R`` minimising ``||A - B R||_F`` over the full group O(m).

    With ``B^T A = W Psi U^T`` the minimiser is ``R = W U^T``. Reflections are
    allowed. When ``B^T A`` is rank deficient the minimiser is not unique and
    the one returned follows LAPACK's SVD conventions.
    """
    W, _, Ut = np.linalg.svd(np.swapaxes(B, -1, -2) @ A)
    return W @ Ut


def dist_procrustes_power(S1, S2, alpha):
    r"""Procrustes power distance and the optimal orthogonal matrix.

    Computes :math:`\min_{R \in O(m)} \frac{1}{|\alpha|}\|S_1^\alpha - S_2^\alpha R\|_F`.
    The result never exceeds :func:`dist_power` since ``R = I`` is feasible.

    Returns
    -------
    distance : float
    rotation : ndarray, shape (m, m)
    """
    alpha = float(alpha)
    if alpha == 0:
        raise ValueError("the Procrustes power distance is undefined for alpha = 0")
    S1, S2 = as_symmetric(S1, "S1"), as_symmetric(S2, "S2")
    A, B = matrix_power(S1, alpha), matrix_power(S2, alpha)
    R = procrustes_rotation(A, B)
    return frobenius_norm(A - B @ R) / abs(alpha), R
