"""Harmonic-mean density track fusion."""

from .fusion import (
    FusedResult,
    FusionWeight,
    Method,
    centralized,
    ci,
    fuse,
    fuse_arrays,
    hmd_ga,
    ici,
    known_prior_fusion,
    naive,
    optimize_weight,
)
from .gaussian import GaussianEstimate, GaussianMixture, NotPositiveDefiniteError
from .sampling import SampleFusionConfig, gmd_s_gaussian, hmd_s_gaussian, hmd_s_mixture

__version__ = "0.1.0"

__all__ = [
    "FusedResult",
    "FusionWeight",
    "GaussianEstimate",
    "GaussianMixture",
    "Method",
    "NotPositiveDefiniteError",
    "SampleFusionConfig",
    "centralized",
    "ci",
    "fuse",
    "fuse_arrays",
    "gmd_s_gaussian",
    "hmd_ga",
    "hmd_s_gaussian",
    "hmd_s_mixture",
    "ici",
    "known_prior_fusion",
    "naive",
    "optimize_weight",
]
