"""Bessel K-form densities for band-pass filtered image statistics.

    f(x; p, c) = |x|^(p - 1/2) K_(p - 1/2)(sqrt(2/c) |x|) / Z(p, c)
    Z(p, c)    = sqrt(pi) Gamma(p) (2c)^(p/2 + 1/4) / 2

The density has variance p*c and kurtosis 3 + 3/p, so the moment estimator
is p = 3 / (SK - 3), c = SV / p.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .filters import log_gabor_filter
from .special import log_bessel_k


class NonLeptokurticError(ValueError):
    """Sample kurtosis <= 3: no K-form has that shape."""


class QuadratureError(RuntimeError):
    def __init__(self, message: str, abserr: float):
        super().__init__(f"{message} (achieved abs. error {abserr:.3g})")
        self.abserr = abserr


@dataclass(frozen=True)
class KFormParams:
    p: float
    c: float

    def __post_init__(self):
        if not (self.p > 0 and self.c > 0 and math.isfinite(self.p) and math.isfinite(self.c)):
            raise ValueError(f"K-form parameters must be positive and finite, got p={self.p}, c={self.c}")

    @property
    def variance(self) -> float:
        return self.p * self.c

    @property
    def kurtosis(self) -> float:
        return 3.0 + 3.0 / self.p


def log_normalizer(params: KFormParams) -> float:
    p, c = params.p, params.c
    return 0.5 * math.log(math.pi) + math.lgamma(p) + (0.5 * p + 0.25) * math.log(2.0 * c) - math.log(2.0)


def _logpdf_scalar(x: float, params: KFormParams, log_z: float) -> float:
    p, c = params.p, params.c
    nu = p - 0.5
    ax = abs(x)
    if ax == 0.0:
        if p <= 0.5:
            return math.inf
        # |x|^nu K_nu(b|x|) -> Gamma(nu) 2^(nu-1) b^-nu as x -> 0
        b = math.sqrt(2.0 / c)
        return math.lgamma(nu) + (nu - 1.0) * math.log(2.0) - nu * math.log(b) - log_z
    b = math.sqrt(2.0 / c)
    return nu * math.log(ax) + float(log_bessel_k(abs(nu), b * ax)) - log_z


def kform_logpdf(x, params: KFormParams):
    """log f(x; p, c); ``+inf`` at x = 0 when p <= 1/2."""
    log_z = log_normalizer(params)
    xs = np.asarray(x, dtype=float)
    if xs.ndim == 0:
        return _logpdf_scalar(float(xs), params, log_z)
    return np.array([_logpdf_scalar(float(v), params, log_z) for v in xs.ravel()]).reshape(xs.shape)


def kform_pdf(x, params: KFormParams):
    """K-form density. At x = 0 it returns the finite limit for p > 1/2 and ``inf`` otherwise."""
    return np.exp(kform_logpdf(x, params))


def sample_moments(data) -> tuple[float, float]:
    """(kurtosis, variance) with population (biased) moments."""
    x = np.asarray(data, dtype=float).ravel()
    if x.size < 2:
        raise ValueError("need at least two values")
    d = x - x.mean()
    m2 = float(np.mean(d * d))
    if m2 == 0:
        raise NonLeptokurticError("constant data has no defined kurtosis")
    m4 = float(np.mean(d**4))
    return m4 / (m2 * m2), m2


def estimate_kform(filtered) -> KFormParams:
    """Moment estimate p = 3/(SK-3), c = SV/p from filtered pixel values."""
    sk, sv = sample_moments(filtered)
    if sk <= 3.0:
        raise NonLeptokurticError(f"sample kurtosis {sk:.4f} <= 3 (non-leptokurtic data)")
    p = 3.0 / (sk - 3.0)
    return KFormParams(p, sv / p)


def image_kform(image, center_frequency: float = 0.1, sigma_ratio: float = 0.55) -> KFormParams:
    """Fit a K-form to the log-Gabor response of an image given in [0, 1].

    The image is taken to 8-bit gray-level units first, so ``c`` is on the
    scale of 0..255 intensities.
    """
    img = np.asarray(image, dtype=float) * 255.0
    return estimate_kform(log_gabor_filter(img, center_frequency, sigma_ratio))


def support_half_width(params: KFormParams) -> float:
    """Half-width beyond which both tails hold far less than 1e-6 of the mass."""
    p, c = params.p, params.c
    # 50 standard deviations, or 40 decay lengths of the exponential tail
    return max(50.0 * math.sqrt(p * c), 40.0 * math.sqrt(c / 2.0))


def _integrate(fn, upper: float, breaks) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        out = integrate.quad(fn, 0.0, upper, points=breaks, limit=500,
                             epsabs=1e-13, epsrel=1e-10, full_output=1)
    value, abserr = out[0], out[1]
    if not math.isfinite(value):
        raise QuadratureError("quadrature produced a non-finite value", abserr)
    if len(out) > 3 and abserr > max(1e-8, 1e-6 * abs(value)):
        raise QuadratureError(f"quadrature did not converge: {out[3]}", abserr)
    return value


def kform_distance(f1: KFormParams, f2: KFormParams, kind: str = "kl") -> float:
    """d_KL = int log(f1/f2) f1 dx, or d_I = sqrt(int (f1 - f2)^2 dx).

    Both integrands are even, so the integral runs over [0, L] and is doubled.
    A density with p <= 1/4 is not square-integrable (f ~ |x|^(2p-1) at 0),
    so d_I against any other density is ``inf``.
    """
    if kind not in ("kl", "l2"):
        raise ValueError("kind must be 'kl' or 'l2'")
    if f1 == f2:
        return 0.0
    if kind == "l2" and min(f1.p, f2.p) <= 0.25:
        return math.inf
    upper = max(support_half_width(f1), support_half_width(f2))
    lz1, lz2 = log_normalizer(f1), log_normalizer(f2)
    scales = sorted({math.sqrt(f.p * f.c) for f in (f1, f2)} | {math.sqrt(f.c / 2.0) for f in (f1, f2)})
    breaks = [s for s in scales if s < upper]

    if kind == "kl":
        def integrand(x):
            l1 = _logpdf_scalar(x, f1, lz1)
            l2 = _logpdf_scalar(x, f2, lz2)
            if l1 == -math.inf:
                return 0.0
            return math.exp(l1) * (l1 - l2)

        return max(2.0 * _integrate(integrand, upper, breaks), 0.0)

    def integrand(x):
        d = math.exp(_logpdf_scalar(x, f1, lz1)) - math.exp(_logpdf_scalar(x, f2, lz2))
        return d * d

    return math.sqrt(max(2.0 * _integrate(integrand, upper, breaks), 0.0))


def distance_matrix(params, kind: str = "l2", workers: int = 1) -> np.ndarray:
    """Symmetric pairwise K-form distances (d_KL is symmetrized by averaging)."""
    params = list(params)
    n = len(params)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]

    def one(ij):
        i, j = ij
        d = kform_distance(params[i], params[j], kind)
        if kind == "kl":
            d = 0.5 * (d + kform_distance(params[j], params[i], kind))
        return d

    if workers > 1 and len(pairs) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(workers) as pool:
            values = list(pool.map(one, pairs))
    else:
        values = [one(ij) for ij in pairs]
    out = np.zeros((n, n))
    for (i, j), d in zip(pairs, values):
        out[i, j] = out[j, i] = d
    return out
