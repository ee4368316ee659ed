"""Monte Carlo coverage study for the power-parameter confidence interval.

Tensors are generated as ``S = (alpha X)**(1/alpha)`` with
``vech(X) ~ N(mu, sigma2 I)``. Each replication draws ``n_v * n_s`` i.i.d.
tensors from its own RNG substream (``SeedSequence.spawn``), fits the profile
likelihood and records whether the true ``alpha`` lies in the interval.
"""
import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .exceptions import AllPointsFailedError, RejectionLimitError
from .likelihood import AlphaGrid, fit_alpha
from .spd import psd_tolerance, spectral_decompose, unvech, vech, vech_dim

MAX_ATTEMPTS = 100


def _default_mu():
    return vech(np.diag([2.0, 1.0, 1.0]))


@dataclass(frozen=True)
class SimDesign:
    n_v: int = 4
    n_s: int = 5
    replications: int = 1000
    alpha_true: float = 0.3
    sigma2: float = 0.02
    mu: np.ndarray = field(default_factory=_default_mu)
    m: int = 3
    grid: AlphaGrid = field(default_factory=AlphaGrid)
    ci_drop: float = 2.0
    seed: int = 0

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        object.__setattr__(self, "mu", mu)
        if mu.shape != (vech_dim(self.m),):
            raise ValueError(f"mu must have length {vech_dim(self.m)} for m = {self.m}")
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive")
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        if self.n_v < 1 or self.n_s < 1:
            raise ValueError("n_v and n_s must be at least 1")
        if self.n <= vech_dim(self.m):
            raise ValueError(f"n_v * n_s must exceed m(m+1)/2 = {vech_dim(self.m)}")

    @property
    def n(self):
        return self.n_v * self.n_s


@dataclass(frozen=True)
class CoverageReport:
    design: SimDesign
    coverage: float
    mc_stderr: float
    failures: int
    covered: int
    successes: int
    rejections: int

    CSV_FIELDS = ("n_v", "n_s", "replications", "coverage", "mc_stderr", "failures", "seed")

    def to_dict(self):
        d = self.design
        return {
            "n_v": d.n_v,
            "n_s": d.n_s,
            "replications": d.replications,
            "coverage": self.coverage,
            "mc_stderr": self.mc_stderr,
            "failures": self.failures,
            "seed": d.seed,
            "alpha_true": d.alpha_true,
            "sigma2": d.sigma2,
            "rejections": self.rejections,
        }

    def to_csv(self, header=True):
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=self.CSV_FIELDS, extrasaction="ignore", lineterminator="\n")
        if header:
            writer.writeheader()
        writer.writerow(self.to_dict())
        return buf.getvalue()


def sample_tensors(design, n, rng):
    """Draw ``n`` tensors from the design's generating model.

    Draws whose ``alpha X`` is not positive definite are redrawn, at most
    ``MAX_ATTEMPTS`` times per tensor.

    Returns
    -------
    S : ndarray, shape (n, m, m)
    rejections : int
    """
    m, alpha = design.m, float(design.alpha_true)
    p = vech_dim(m)
    scale = np.sqrt(design.sigma2)
    out = np.empty((n, m, m))
    pending = np.arange(n)
    rejections = 0
    for _ in range(MAX_ATTEMPTS):
        X = unvech(design.mu + scale * rng.standard_normal((len(pending), p)), m)
        if alpha == 0:
            decomp = spectral_decompose(X)
            ok = np.ones(len(pending), dtype=bool)
            vals = np.exp(decomp.eigenvalues)
        else:
            decomp = spectral_decompose(alpha * X)
            lam = decomp.eigenvalues
            ok = lam[:, -1] > psd_tolerance(lam)
            vals = np.exp(np.log(np.where(lam > 0, lam, 1.0)) / alpha)
        U = decomp.eigenvectors
        S = (U * vals[:, None, :]) @ np.swapaxes(U, -1, -2)
        out[pending[ok]] = S[ok]
        rejections += int((~ok).sum())
        pending = pending[~ok]
        if not len(pending):
            return out, rejections
    raise RejectionLimitError(
        f"{len(pending)} draws not positive definite after {MAX_ATTEMPTS} attempts"
    )


def sample_tensor(design, rng):
    return sample_tensors(design, 1, rng)[0][0]


def _replicate(design, seed_seq):
    rng = np.random.default_rng(seed_seq)
    S, rejections = sample_tensors(design, design.n, rng)
    try:
        fit = fit_alpha(S, design.grid, ci_drop=design.ci_drop)
    except AllPointsFailedError:
        return None, rejections
    return fit.covers(design.alpha_true), rejections


def run_coverage(design, n_jobs=None):
    """Monte Carlo coverage of the likelihood-ratio interval for ``alpha_true``.

    Failed fits are excluded from the coverage denominator and counted in
    ``failures``. The report is identical for any ``n_jobs``.
    """
    children = np.random.SeedSequence(design.seed).spawn(design.replications)
    if n_jobs is not None and n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(lambda s: _replicate(design, s), children))
    else:
        results = [_replicate(design, s) for s in children]

    outcomes = [r[0] for r in results]
    successes = sum(o is not None for o in outcomes)
    covered = sum(bool(o) for o in outcomes if o is not None)
    coverage = covered / successes if successes else float("nan")
    stderr = float(np.sqrt(coverage * (1 - coverage) / successes)) if successes else float("nan")
    return CoverageReport(
        design=design,
        coverage=coverage,
        mc_stderr=stderr,
        failures=design.replications - successes,
        covered=covered,
        successes=successes,
        rejections=sum(r[1] for r in results),
    )


def simulate_field(design=None, n_subjects=9, extent=(10.0, 6.0, 4.0), pitch=0.34,
                   subject_scales=None, mean_norm=None, seed=0):
    """Synthetic registered field: every subject on the same cubic lattice.

    Each voxel carries an independent draw from ``design``'s generating
    model, multiplied by the subject's scale factor. With ``mean_norm`` set,
    each subject is first rescaled so that its arithmetic mean tensor has
    exactly that Frobenius norm; with unit subject scales this puts the whole
    field on one common scale.

    Returns
    -------
    TensorField
    """
    from .field import TensorField

    if design is None:
        design = SimDesign()
    if subject_scales is None:
        subject_scales = np.ones(n_subjects)
    subject_scales = np.asarray(subject_scales, dtype=float)
    if subject_scales.shape != (n_subjects,):
        raise ValueError("need one scale per subject")
    axes = [np.arange(0.0, e + 1e-9, pitch) for e in extent]
    mesh = np.meshgrid(*axes, indexing="ij")
    lattice = np.column_stack([g.ravel() for g in mesh])
    rng = np.random.default_rng(seed)
    ids, positions, tensors = [], [], []
    for k in range(n_subjects):
        S, _ = sample_tensors(design, len(lattice), rng)
        if mean_norm is not None:
            S = S * (mean_norm / np.linalg.norm(S.mean(axis=0)))
        ids.extend([f"subject{k + 1}"] * len(lattice))
        positions.append(lattice)
        tensors.append(S * subject_scales[k])
    return TensorField(np.array(ids), np.vstack(positions), np.concatenate(tensors))
