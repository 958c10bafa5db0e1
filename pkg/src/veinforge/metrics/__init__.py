"""Validation statistics for synthetic vein image sets."""

from .cluster import Dendrogram, Merge, hcluster
from .features import (
    GlcmFeatures,
    brightness_uniformity,
    extract_features,
    feature_matrix,
    glcm,
    glcm_features,
)
from .fid import FeatureStats, IndefiniteCovarianceError, fid
from .filters import log_gabor_filter, log_gabor_transfer
from .kforms import (
    KFormParams,
    NonLeptokurticError,
    QuadratureError,
    distance_matrix,
    estimate_kform,
    image_kform,
    kform_distance,
    kform_logpdf,
    kform_pdf,
)
from .nn import nn_loo_accuracy, nn_loo_accuracy_features
from .special import bessel_k, bessel_k_scaled, log_bessel_k

__all__ = [
    "Dendrogram", "Merge", "hcluster",
    "GlcmFeatures", "brightness_uniformity", "extract_features", "feature_matrix", "glcm", "glcm_features",
    "FeatureStats", "IndefiniteCovarianceError", "fid",
    "log_gabor_filter", "log_gabor_transfer",
    "KFormParams", "NonLeptokurticError", "QuadratureError", "distance_matrix", "estimate_kform",
    "image_kform", "kform_distance", "kform_logpdf", "kform_pdf",
    "nn_loo_accuracy", "nn_loo_accuracy_features",
    "bessel_k", "bessel_k_scaled", "log_bessel_k",
]
