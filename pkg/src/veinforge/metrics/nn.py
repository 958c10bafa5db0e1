"""Leave-one-out 1-nearest-neighbour two-sample test."""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist

from .features import feature_matrix


def nn_loo_accuracy_features(features_a, features_b) -> float:
    """LOO 1-NN accuracy on precomputed feature rows.

    Every row is labelled by its set and classified by its nearest other row
    (Euclidean, ties to the lower index over the concatenation ``a ++ b``).
    0.5 means the sets are indistinguishable; 0.0 happens for duplicated sets.
    """
    fa = np.atleast_2d(np.asarray(features_a, dtype=float))
    fb = np.atleast_2d(np.asarray(features_b, dtype=float))
    if len(fa) == 0 or len(fb) == 0:
        raise ValueError("both sets must be non-empty")
    x = np.vstack([fa, fb])
    labels = np.r_[np.zeros(len(fa), dtype=int), np.ones(len(fb), dtype=int)]
    d = cdist(x, x)
    np.fill_diagonal(d, np.inf)
    nearest = np.argmin(d, axis=1)
    return float(np.mean(labels[nearest] == labels))


def nn_loo_accuracy(set_a, set_b) -> float:
    """LOO 1-NN accuracy between two image sets, on :func:`extract_features` vectors."""
    if len(set_a) == 0 or len(set_b) == 0:
        raise ValueError("both sets must be non-empty")
    return nn_loo_accuracy_features(feature_matrix(set_a), feature_matrix(set_b))
