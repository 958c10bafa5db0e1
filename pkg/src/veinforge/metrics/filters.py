"""Frequency-domain radial log-Gabor filter."""

from __future__ import annotations

import numpy as np

MIN_SIDE = 16


def log_gabor_transfer(shape, center_frequency: float = 0.1, sigma_ratio: float = 0.55) -> np.ndarray:
    """G(f) = exp(-(ln(f/f0))^2 / (2 ln(sigma)^2)) on the FFT grid, with G(0) = 0."""
    if center_frequency <= 0:
        raise ValueError("center_frequency must be positive")
    if not 0 < sigma_ratio < 1:
        raise ValueError("sigma_ratio must lie in (0, 1)")
    h, w = shape
    fy = np.fft.fftfreq(h)[:, None]
    fx = np.fft.fftfreq(w)[None, :]
    f = np.hypot(fx, fy)
    f[0, 0] = 1.0  # placeholder, DC is zeroed below
    g = np.exp(-np.log(f / center_frequency) ** 2 / (2.0 * np.log(sigma_ratio) ** 2))
    g[0, 0] = 0.0
    return g


def log_gabor_filter(image, center_frequency: float = 0.1, sigma_ratio: float = 0.55) -> np.ndarray:
    """Band-pass an image with a single radial log-Gabor filter; real part returned."""
    image = np.asarray(image, dtype=float)
    if image.ndim != 2 or min(image.shape) < MIN_SIDE:
        raise ValueError(f"image must be 2-D and at least {MIN_SIDE}x{MIN_SIDE}")
    g = log_gabor_transfer(image.shape, center_frequency, sigma_ratio)
    return np.real(np.fft.ifft2(np.fft.fft2(image) * g))
