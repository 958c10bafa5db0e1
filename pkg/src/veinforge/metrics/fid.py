"""Frechet distance between Gaussian summaries of two feature sets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EIG_TOL = 1e-10


class IndefiniteCovarianceError(ValueError):
    pass


@dataclass
class FeatureStats:
    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        self.mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        self.covariance = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        k = self.mean.shape[0]
        if self.covariance.shape != (k, k):
            raise ValueError(f"covariance shape {self.covariance.shape} does not match mean length {k}")
        if not np.allclose(self.covariance, self.covariance.T, rtol=0.0, atol=1e-12):
            raise ValueError("covariance must be symmetric")

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    @classmethod
    def from_features(cls, features) -> "FeatureStats":
        """Sample mean and (unbiased) covariance of an ``(n, k)`` feature array."""
        x = np.asarray(features, dtype=float)
        if x.ndim != 2 or x.shape[0] < 2:
            raise ValueError("need an (n, k) array with n >= 2")
        cov = np.cov(x, rowvar=False)
        return cls(x.mean(axis=0), 0.5 * (cov + cov.T))


def _psd_sqrt(m: np.ndarray, what: str) -> tuple[np.ndarray, np.ndarray]:
    w, v = np.linalg.eigh(0.5 * (m + m.T))
    if w.min(initial=0.0) < -EIG_TOL:
        raise IndefiniteCovarianceError(f"{what} has eigenvalue {w.min():.3g} < -{EIG_TOL}")
    w = np.clip(w, 0.0, None)
    return w, (v * np.sqrt(w)) @ v.T


def fid(real: FeatureStats, synth: FeatureStats) -> float:
    """||mu_x - mu_g||^2 + Tr(S_x + S_g - 2 (S_x S_g)^(1/2)).

    The trace of the cross term is taken from the eigenvalues of the
    symmetric matrix S_x^(1/2) S_g S_x^(1/2), which has the same spectrum
    as S_x S_g.
    """
    if real.dim != synth.dim:
        raise ValueError(f"dimension mismatch: {real.dim} vs {synth.dim}")
    _, root_x = _psd_sqrt(real.covariance, "real covariance")
    _psd_sqrt(synth.covariance, "synthetic covariance")
    cross_eig, _ = _psd_sqrt(root_x @ synth.covariance @ root_x, "covariance product")
    diff = real.mean - synth.mean
    value = float(diff @ diff + np.trace(real.covariance) + np.trace(synth.covariance)
                  - 2.0 * np.sqrt(cross_eig).sum())
    return max(value, 0.0)
