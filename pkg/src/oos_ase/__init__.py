"""Adjacency spectral embedding of random dot product graphs, with
least-squares and constrained maximum-likelihood out-of-sample extensions,
and a seeded Monte-Carlo harness for the asymptotics they satisfy.
"""

from .align import (
    ProcrustesResult,
    aligned_error,
    clt_rotation,
    latent_eigenpairs,
    procrustes,
)
from .embedding import Embedding, ase, embed_full, embed_matrix
from .errors import (
    ConfigError,
    DegeneracyError,
    DegenerateAlignmentError,
    DegenerateSpectrumError,
    FeasibilityError,
    FileFormatError,
    ModelViolationError,
    NonConvergenceError,
    OosAseError,
    SingularityError,
    SolverError,
    ThresholdError,
)
from .experiments import (
    ExperimentConfig,
    StudyResult,
    TrialRecord,
    run_clt_study,
    run_error_ratio,
    run_rate_sweep,
    run_study,
)
from .linalg import EigenPairs, lstsq, svd_small, top_eigs
from .model import (
    AdjacencyMatrix,
    EdgeVector,
    LatentDistribution,
    LatentMatrix,
    augment,
    sample_adjacency,
    sample_latents,
    sample_oos_edges,
)
from .oos import OosEstimate, SolverOptions, likelihood, lls_oos, ml_oos
from .theory import (
    ClassifySpec,
    chi2_quantile,
    classify_error,
    classify_threshold,
    delta,
    error_ratio_curve,
    norm_cdf,
    sigma_clt,
)

__version__ = "0.1.0"

__all__ = [
    "AdjacencyMatrix",
    "ClassifySpec",
    "ConfigError",
    "DegeneracyError",
    "DegenerateAlignmentError",
    "DegenerateSpectrumError",
    "EdgeVector",
    "EigenPairs",
    "Embedding",
    "ExperimentConfig",
    "FeasibilityError",
    "FileFormatError",
    "LatentDistribution",
    "LatentMatrix",
    "ModelViolationError",
    "NonConvergenceError",
    "OosAseError",
    "OosEstimate",
    "ProcrustesResult",
    "SingularityError",
    "SolverError",
    "SolverOptions",
    "StudyResult",
    "ThresholdError",
    "TrialRecord",
    "aligned_error",
    "ase",
    "augment",
    "chi2_quantile",
    "classify_error",
    "classify_threshold",
    "clt_rotation",
    "delta",
    "embed_full",
    "embed_matrix",
    "error_ratio_curve",
    "latent_eigenpairs",
    "likelihood",
    "lls_oos",
    "lstsq",
    "ml_oos",
    "norm_cdf",
    "procrustes",
    "run_clt_study",
    "run_error_ratio",
    "run_rate_sweep",
    "run_study",
    "sample_adjacency",
    "sample_latents",
    "sample_oos_edges",
    "sigma_clt",
    "svd_small",
    "top_eigs",
]
