"""Estimators for the exponent of power-law urn models, with a Monte Carlo
harness that verifies their limit theorems at desk scale."""

__version__ = "0.1.0"

from .errors import (AmbiguousRootError, DomainError, InputFormatError,
                     InsufficientDataError, NoRootError, UsageError,
                     ZipfestError)
from .law import PowerLaw, make_zipf_law, zeta_normalization
from .occupancy import StatisticsSnapshot, StreamAccumulator, summarize
from .sampler import (OccupancyCounts, SeedSpec, sample_fixed,
                      sample_poissonized, sample_trajectory)
from .estimators import (EstimateResult, ImplicitSolver, implicit_estimate,
                         log_ratio_estimate, ratio_estimate_k,
                         ratio_estimate_r1)
from .asymptotics import (CovarianceSpec, implicit_variance,
                          limiting_cov_matrix, ratio_k_variance,
                          ratio_r1_variance)
from .montecarlo import (ExperimentConfig, StudyReport, covariance_study,
                         ks_test, normality_study, remainder_study)
from .ingest import CorpusCounts, load_counts, to_occupancy, tokenize_text

__all__ = [
    "__version__",
    "ZipfestError", "DomainError", "UsageError", "InsufficientDataError",
    "InputFormatError", "NoRootError", "AmbiguousRootError",
    "PowerLaw", "make_zipf_law", "zeta_normalization",
    "StatisticsSnapshot", "StreamAccumulator", "summarize",
    "OccupancyCounts", "SeedSpec", "sample_fixed", "sample_poissonized",
    "sample_trajectory",
    "EstimateResult", "ImplicitSolver", "implicit_estimate",
    "log_ratio_estimate", "ratio_estimate_k", "ratio_estimate_r1",
    "CovarianceSpec", "implicit_variance", "limiting_cov_matrix",
    "ratio_k_variance", "ratio_r1_variance",
    "ExperimentConfig", "StudyReport", "covariance_study", "ks_test",
    "normality_study", "remainder_study",
    "CorpusCounts", "load_counts", "to_occupancy", "tokenize_text",
]
