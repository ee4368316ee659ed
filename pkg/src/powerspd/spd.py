"""Dense symmetric-matrix kernel.

Spectral decomposition by cyclic Jacobi rotations, spectral matrix functions
(power, log, exp), half-vectorisation and definiteness checks. Every function
accepts a single ``(m, m)`` matrix or a stack ``(..., m, m)``.
"""
from enum import Enum
from typing import NamedTuple

import numpy as np

from .exceptions import ConvergenceError, DomainError

MAX_SWEEPS = 100
OFF_DIAGONAL_TOL = 1e-13
PSD_RTOL = 1e-12


class SpectralDecomp(NamedTuple):
    """Eigenvalues sorted descending and matching orthonormal eigenvectors.

    ``eigenvectors[..., :, i]`` pairs with ``eigenvalues[..., i]``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self):
        U, lam = self.eigenvectors, self.eigenvalues
        return (U * lam[..., None, :]) @ np.swapaxes(U, -1, -2)


class Definiteness(Enum):
    POSITIVE_DEFINITE = "PositiveDefinite"
    POSITIVE_SEMIDEFINITE = "PositiveSemiDefinite"
    INDEFINITE = "Indefinite"


def as_symmetric(S, name="S"):
    """Validate ``S`` as a finite symmetric matrix (or stack) and return floats.

    The two triangles must agree to ``1e-10 * (1 + max|S|)``; the result is
    exactly symmetrised.
    """
    S = np.asarray(S, dtype=float)
    if S.ndim < 2 or S.shape[-1] != S.shape[-2]:
        raise ValueError(f"{name} must be square, got shape {S.shape}")
    if S.shape[-1] < 1:
        raise ValueError(f"{name} must have dimension >= 1")
    if not np.all(np.isfinite(S)):
        raise ValueError(f"{name} contains non-finite entries")
    St = np.swapaxes(S, -1, -2)
    scale = 1.0 + (np.abs(S).max() if S.size else 0.0)
    if np.abs(S - St).max(initial=0.0) > 1e-10 * scale:
        raise ValueError(f"{name} is not symmetric")
    return 0.5 * (S + St)


def psd_tolerance(eigenvalues):
    """Eigenvalue clamp ``1e-12 * max(1, lambda_max)`` (broadcast over stacks)."""
    lam_max = np.max(eigenvalues, axis=-1)
    return PSD_RTOL * np.maximum(1.0, lam_max)


def _jacobi(A):
    # A: (N, m, m) float copy, diagonalised in place
    N, m, _ = A.shape
    V = np.broadcast_to(np.eye(m), A.shape).copy()
    if m == 1:
        return np.diagonal(A, axis1=-2, axis2=-1).copy(), V
    iu = np.triu_indices(m, 1)
    thresh = OFF_DIAGONAL_TOL * np.sqrt(np.sum(A * A, axis=(-2, -1)))
    for _ in range(MAX_SWEEPS):
        off = np.sqrt(2.0 * np.sum(A[:, iu[0], iu[1]] ** 2, axis=-1))
        active = off > thresh
        if not active.any():
            return np.diagonal(A, axis1=-2, axis2=-1).copy(), V
        idx = np.flatnonzero(active)
        Ab, Vb = A[idx], V[idx]
        for p in range(m - 1):
            for q in range(p + 1, m):
                apq = Ab[:, p, q]
                nz = apq != 0.0
                safe = np.where(nz, apq, 1.0)
                theta = (Ab[:, q, q] - Ab[:, p, p]) / (2.0 * safe)
                t = np.where(theta >= 0, 1.0, -1.0) / (np.abs(theta) + np.hypot(theta, 1.0))
                t = np.where(nz, t, 0.0)
                c = 1.0 / np.hypot(t, 1.0)
                s = t * c
                c_, s_ = c[:, None], s[:, None]
                col_p, col_q = Ab[:, :, p].copy(), Ab[:, :, q].copy()
                Ab[:, :, p] = c_ * col_p - s_ * col_q
                Ab[:, :, q] = s_ * col_p + c_ * col_q
                row_p, row_q = Ab[:, p, :].copy(), Ab[:, q, :].copy()
                Ab[:, p, :] = c_ * row_p - s_ * row_q
                Ab[:, q, :] = s_ * row_p + c_ * row_q
                Ab[:, p, q] = Ab[:, q, p] = 0.0
                vp, vq = Vb[:, :, p].copy(), Vb[:, :, q].copy()
                Vb[:, :, p] = c_ * vp - s_ * vq
                Vb[:, :, q] = s_ * vp + c_ * vq
        A[idx], V[idx] = Ab, Vb
    raise ConvergenceError(f"Jacobi eigen-solver did not converge in {MAX_SWEEPS} sweeps")


def spectral_decompose(S):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Parameters
    ----------
    S : array_like, shape (..., m, m)
        Finite symmetric matrix or stack of matrices.

    Returns
    -------
    SpectralDecomp
        Eigenvalues sorted in descending order. Each eigenvector column is
        signed so that its largest-magnitude component is positive (the first
        such component on ties).
    """
    S = as_symmetric(S)
    batch_shape, m = S.shape[:-2], S.shape[-1]
    A = S.reshape(-1, m, m).copy()
    lam, V = _jacobi(A)

    order = np.argsort(-lam, axis=-1, kind="stable")
    lam = np.take_along_axis(lam, order, axis=-1)
    V = np.take_along_axis(V, order[:, None, :], axis=-1)

    lead = np.argmax(np.abs(V), axis=-2)
    signs = np.take_along_axis(V, lead[:, None, :], axis=-2)
    V = V * np.where(signs < 0, -1.0, 1.0)

    return SpectralDecomp(lam.reshape(batch_shape + (m,)), V.reshape(batch_shape + (m, m)))


def classify_definiteness(eigenvalues, tol=None):
    """Classify from eigenvalues: PD if all exceed ``tol``, PSD if none is below ``-tol``."""
    lam = np.asarray(eigenvalues, dtype=float)
    if tol is None:
        tol = psd_tolerance(lam)
    lo = lam.min()
    if lo > tol:
        return Definiteness.POSITIVE_DEFINITE
    if lo >= -tol:
        return Definiteness.POSITIVE_SEMIDEFINITE
    return Definiteness.INDEFINITE


def _from_spectrum(U, values):
    return (U * values[..., None, :]) @ np.swapaxes(U, -1, -2)


def check_power_domain(eigenvalues, alpha):
    """Validate eigenvalues for the power ``alpha`` and return them clamped.

    For ``alpha <= 0`` every eigenvalue must exceed the semi-definite tolerance.
    For ``alpha > 0`` negatives within tolerance are clamped to zero.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    tol = psd_tolerance(lam)[..., None]
    if alpha <= 0:
        bad = lam <= tol
        if bad.any():
            offending = lam[bad].flat[0]
            raise DomainError(
                f"power {alpha} requires a positive definite matrix; "
                f"found eigenvalue {offending:.6g}",
                eigenvalue=float(offending),
            )
        return lam
    bad = lam < -tol
    if bad.any():
        offending = lam[bad].flat[0]
        raise DomainError(
            f"matrix is not positive semi-definite; found eigenvalue {offending:.6g}",
            eigenvalue=float(offending),
        )
    return np.maximum(lam, 0.0)


def matrix_power(S, alpha, decomp=None):
    """Spectral power ``U diag(lambda**alpha) U^T``.

    ``alpha <= 0`` requires a positive definite input; ``alpha > 0`` accepts
    semi-definite input with ``0**alpha = 0``.
    """
    alpha = float(alpha)
    if not np.isfinite(alpha):
        raise ValueError("alpha must be finite")
    if decomp is None:
        decomp = spectral_decompose(S)
    lam = check_power_domain(decomp.eigenvalues, alpha)
    if alpha == 0:
        return _from_spectrum(decomp.eigenvectors, np.ones_like(lam))
    with np.errstate(divide="ignore"):
        powered = np.where(lam > 0, lam ** alpha, 0.0) if alpha > 0 else lam ** alpha
    return _from_spectrum(decomp.eigenvectors, powered)


def matrix_log(S, decomp=None):
    """Principal matrix logarithm of a positive definite matrix."""
    if decomp is None:
        decomp = spectral_decompose(S)
    lam = check_power_domain(decomp.eigenvalues, 0.0)
    return _from_spectrum(decomp.eigenvectors, np.log(lam))


def matrix_exp(S):
    decomp = spectral_decompose(S)
    return _from_spectrum(decomp.eigenvectors, np.exp(decomp.eigenvalues))


def vech_dim(m):
    return m * (m + 1) // 2


def dim_from_vech(p):
    m = int(round((np.sqrt(8 * p + 1) - 1) / 2))
    if vech_dim(m) != p:
        raise ValueError(f"length {p} is not a triangular number m(m+1)/2")
    return m


def vech(S):
    """Upper triangle of ``S`` in row-major order, without off-diagonal weighting."""
    S = np.asarray(S, dtype=float)
    iu = np.triu_indices(S.shape[-1])
    return S[..., iu[0], iu[1]]


def unvech(v, m=None):
    """Inverse of :func:`vech`; ``m`` is inferred from the length when omitted."""
    v = np.asarray(v, dtype=float)
    p = v.shape[-1]
    if m is None:
        m = dim_from_vech(p)
    elif vech_dim(m) != p:
        raise ValueError(f"vech of a {m}x{m} matrix has {vech_dim(m)} entries, got {p}")
    S = np.zeros(v.shape[:-1] + (m, m))
    iu = np.triu_indices(m)
    S[..., iu[0], iu[1]] = v
    S[..., iu[1], iu[0]] = v
    return S
