"""Texture and quality descriptors: GLCM, brightness uniformity, a 100-d feature vector."""

from __future__ import annotations

from dataclasses import astuple, dataclass

import numpy as np
from scipy import ndimage

FEATURE_SIZE = 128
GLCM_OFFSETS = ((0, 1), (1, 0), (1, 1), (1, -1))
GRADIENT_BINS = 16
GRADIENT_MAX = 0.5


@dataclass(frozen=True)
class GlcmFeatures:
    contrast: float
    variance: float
    correlation: float
    energy: float
    homogeneity: float

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self))


def quantize(image, levels: int) -> np.ndarray:
    """Map [0, 1] intensities to integer levels 0..levels-1."""
    img = np.clip(np.asarray(image, dtype=float), 0.0, 1.0)
    return np.minimum((img * levels).astype(np.int64), levels - 1)


def glcm(image, offset=(0, 1), levels: int = 8) -> np.ndarray:
    """Normalized symmetric co-occurrence matrix at ``offset = (drow, dcol)``."""
    if levels < 2:
        raise ValueError("levels must be >= 2")
    q = quantize(image, levels)
    dr, dc = offset
    h, w = q.shape
    a = q[max(0, -dr):h - max(0, dr), max(0, -dc):w - max(0, dc)]
    b = q[max(0, dr):h + min(0, dr), max(0, dc):w + min(0, dc)]
    m = np.zeros((levels, levels))
    if a.size == 0:
        raise ValueError(f"offset {offset} leaves no pixel pairs")
    np.add.at(m, (a.ravel(), b.ravel()), 1.0)
    m = m + m.T
    return m / m.sum()


def glcm_features(image, offset=(0, 1), levels: int = 8) -> GlcmFeatures:
    p = glcm(image, offset, levels)
    i, j = np.indices(p.shape)
    marginal = p.sum(axis=1)
    lv = np.arange(levels)
    mu = float(lv @ marginal)
    var = float(((lv - mu) ** 2) @ marginal)
    contrast = float(((i - j) ** 2 * p).sum())
    corr = float(((i - mu) * (j - mu) * p).sum() / var) if var > 0 else 0.0
    return GlcmFeatures(
        contrast=contrast,
        variance=var,
        correlation=corr,
        energy=float((p * p).sum()),
        homogeneity=float((p / (1.0 + (i - j) ** 2)).sum()),
    )


def brightness_uniformity(image, grid=(4, 4)) -> float:
    """1 - (max patch mean - min patch mean); 1 means perfectly even lighting.

    The image is reflect-padded up to a multiple of the grid.
    """
    img = np.asarray(image, dtype=float)
    gy, gx = grid
    h, w = img.shape
    ph, pw = (-h) % gy, (-w) % gx
    if ph or pw:
        img = np.pad(img, ((0, ph), (0, pw)), mode="reflect")
        h, w = img.shape
    means = img.reshape(gy, h // gy, gx, w // gx).mean(axis=(1, 3))
    return float(1.0 - (means.max() - means.min()))


def _resample(image: np.ndarray) -> np.ndarray:
    if image.shape == (FEATURE_SIZE, FEATURE_SIZE):
        return image
    factors = (FEATURE_SIZE / image.shape[0], FEATURE_SIZE / image.shape[1])
    out = ndimage.zoom(image, factors, order=1, mode="nearest", grid_mode=True)
    return out[:FEATURE_SIZE, :FEATURE_SIZE]


def extract_features(image) -> np.ndarray:
    """100 values: 8x8 block means, GLCM features at 4 offsets, gradient-magnitude histogram."""
    img = _resample(np.asarray(image, dtype=float))
    b = FEATURE_SIZE // 8
    blocks = img.reshape(8, b, 8, b).mean(axis=(1, 3)).ravel()
    texture = np.concatenate([glcm_features(img, off).as_array() for off in GLCM_OFFSETS])
    gy, gx = np.gradient(img)
    mag = np.minimum(np.hypot(gx, gy), GRADIENT_MAX)
    hist, _ = np.histogram(mag, bins=GRADIENT_BINS, range=(0.0, GRADIENT_MAX))
    grad = hist / mag.size
    return np.concatenate([blocks, texture, grad])


def feature_matrix(images) -> np.ndarray:
    return np.stack([extract_features(im) for im in images])
