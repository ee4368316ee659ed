"""Power-Euclidean geometry and power-parameter estimation for SPD matrices."""

__version__ = "0.1.0"

from .exceptions import (
    AllPointsFailedError,
    ConvergenceError,
    DegenerateError,
    DomainError,
    EmptyInputError,
    ParseError,
    PowerSPDError,
    RejectionLimitError,
    SchemaError,
    SingularSigmaError,
)
from .spd import (
    Definiteness,
    SpectralDecomp,
    classify_definiteness,
    matrix_exp,
    matrix_log,
    matrix_power,
    spectral_decompose,
    unvech,
    vech,
)
from .metrics import dist_log_euclidean, dist_power, dist_procrustes_power, frobenius_norm
from .stats import FrechetMeanResult, fractional_anisotropy, frechet_mean, interpolate
from .likelihood import (
    AlphaFit,
    AlphaGrid,
    GaussianParams,
    fit_alpha,
    log_density_S,
    log_jacobian,
    log_jacobian_ratio,
    power_transform,
    profile_loglik,
    wilks_ci_drop,
)
from .simulation import CoverageReport, SimDesign, run_coverage, sample_tensor, sample_tensors, simulate_field
from .field import (
    AlphaMapEntry,
    Neighborhood,
    TensorField,
    estimate_alpha_map,
    extract_neighborhoods,
    load_field,
    normalize_subjects,
    smooth_alpha_profile,
)
from .estimators import FrechetMean, PowerAlphaEstimator, PowerEuclideanTransformer

__all__ = [
    "AllPointsFailedError",
    "AlphaFit",
    "AlphaGrid",
    "AlphaMapEntry",
    "ConvergenceError",
    "CoverageReport",
    "Definiteness",
    "DegenerateError",
    "DomainError",
    "EmptyInputError",
    "FrechetMean",
    "FrechetMeanResult",
    "GaussianParams",
    "Neighborhood",
    "ParseError",
    "PowerAlphaEstimator",
    "PowerEuclideanTransformer",
    "PowerSPDError",
    "RejectionLimitError",
    "SchemaError",
    "SimDesign",
    "SingularSigmaError",
    "SpectralDecomp",
    "TensorField",
    "classify_definiteness",
    "dist_log_euclidean",
    "dist_power",
    "dist_procrustes_power",
    "estimate_alpha_map",
    "extract_neighborhoods",
    "fit_alpha",
    "fractional_anisotropy",
    "frechet_mean",
    "frobenius_norm",
    "interpolate",
    "load_field",
    "log_density_S",
    "log_jacobian",
    "log_jacobian_ratio",
    "matrix_exp",
    "matrix_log",
    "matrix_power",
    "normalize_subjects",
    "power_transform",
    "profile_loglik",
    "run_coverage",
    "sample_tensor",
    "sample_tensors",
    "simulate_field",
    "smooth_alpha_profile",
    "spectral_decompose",
    "unvech",
    "vech",
    "wilks_ci_drop",
]
