"""Modified Bessel function of the second kind, K_nu(x), for real nu >= 0.

For the fractional part ``mu = nu - round(nu)`` (|mu| <= 1/2) the pair
K_mu, K_mu+1 comes from Temme's series when x < 2 and from Steed's
continued fraction otherwise; integer steps are then taken with the stable
forward recurrence K_{n+1} = (2n/x) K_n + K_{n-1}.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

_EPS = 1e-16
_XMIN = 2.0
_MAXIT = 10000
_EULER = 0.5772156649015329

# Taylor coefficients of 1/Gamma(z) (z + gamma z^2 + ...), used to build
# the Temme gamma combinations without cancellation near mu = 0
_RGAMMA = np.array([
    1.0, 0.5772156649015329, -0.6558780715202538, -0.0420026350340952,
    0.1665386113822915, -0.0421977345555443, -0.0096219715278770,
    0.0072189432466630, -0.0011651675918591, -0.0002152416741149,
    0.0001280502823882, -0.0000201348547807, -0.0000012504934821,
    0.0000011330272320, -0.0000002056338417, 0.0000000061160950,
])


@njit(cache=True)
def _temme_gammas(mu):
    """gam1 = (1/G(1-mu) - 1/G(1+mu)) / (2 mu), gam2 = (1/G(1-mu) + 1/G(1+mu)) / 2."""
    gampl = 1.0 / math.gamma(1.0 + mu)
    gammi = 1.0 / math.gamma(1.0 - mu)
    if abs(mu) < 0.1:
        # odd part of 1/Gamma(1+z) = sum a[k+1] z^k, divided by z
        m2 = mu * mu
        s = 0.0
        for k in range(_RGAMMA.shape[0] - 1, 0, -2):
            s = s * m2 + _RGAMMA[k]
        gam1 = -s
    else:
        gam1 = (gammi - gampl) / (2.0 * mu)
    gam2 = 0.5 * (gammi + gampl)
    return gam1, gam2, gampl, gammi


@njit(cache=True)
def _k_pair(mu, x, scaled):
    """(K_mu(x), K_mu+1(x)) for |mu| <= 1/2; times e^x when ``scaled``."""
    mu2 = mu * mu
    if x < _XMIN:
        x2 = 0.5 * x
        pimu = math.pi * mu
        fact = 1.0 if abs(pimu) < _EPS else pimu / math.sin(pimu)
        d = -math.log(x2)
        e = mu * d
        fact2 = 1.0 if abs(e) < _EPS else math.sinh(e) / e
        gam1, gam2, gampl, gammi = _temme_gammas(mu)
        ff = fact * (gam1 * math.cosh(e) + gam2 * fact2 * d)
        total = ff
        e = math.exp(e)
        p = 0.5 * e / gampl
        q = 0.5 / (e * gammi)
        c = 1.0
        d = x2 * x2
        total1 = p
        for i in range(1, _MAXIT):
            ff = (i * ff + p + q) / (i * i - mu2)
            c *= d / i
            p /= i - mu
            q /= i + mu
            delta = c * ff
            total += delta
            total1 += c * (p - i * ff)
            if abs(delta) < abs(total) * _EPS:
                break
        kmu = total
        k1 = total1 * 2.0 / x
        if scaled:
            s = math.exp(x)
            kmu *= s
            k1 *= s
        return kmu, k1

    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = d
    delh = d
    q1 = 0.0
    q2 = 1.0
    a1 = 0.25 - mu2
    q = a1
    c = a1
    a = -a1
    s = 1.0 + q * delh
    for i in range(2, _MAXIT):
        a -= 2.0 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1 = q2
        q2 = qnew
        q += c * qnew
        b += 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h += delh
        dels = q * delh
        s += dels
        if abs(dels / s) < _EPS:
            break
    h = a1 * h
    kmu = math.sqrt(math.pi / (2.0 * x)) / s
    if not scaled:
        kmu *= math.exp(-x)
    k1 = kmu * (mu + x + 0.5 - h) / x
    return kmu, k1


@njit(cache=True)
def _log_k(nu, x, scaled):
    """log K_nu(x) (log of e^x K_nu(x) when ``scaled``), rescaling to avoid overflow."""
    n = int(math.floor(nu + 0.5))
    mu = nu - n
    kmu, k1 = _k_pair(mu, x, scaled)
    log_scale = 0.0
    for i in range(1, n + 1):
        nxt = 2.0 * (mu + i) / x * k1 + kmu
        kmu = k1
        k1 = nxt
        if k1 > 1e250:
            kmu /= k1
            log_scale += math.log(k1)
            k1 = 1.0
    if kmu == 0.0:
        return -math.inf
    return math.log(kmu) + log_scale


@njit(cache=True)
def _k(nu, x, scaled):
    n = int(math.floor(nu + 0.5))
    mu = nu - n
    kmu, k1 = _k_pair(mu, x, scaled)
    for i in range(1, n + 1):
        nxt = 2.0 * (mu + i) / x * k1 + kmu
        kmu = k1
        k1 = nxt
    return kmu


def _check(nu, x):
    if nu < 0:
        raise ValueError("order must be >= 0 (K_-nu = K_nu)")
    if not x > 0:
        raise ValueError("bessel_k is defined for x > 0 only")


def _apply(fn, nu, x, scaled):
    nu_arr, x_arr = np.broadcast_arrays(np.asarray(nu, dtype=float), np.asarray(x, dtype=float))
    if nu_arr.ndim == 0:
        _check(float(nu_arr), float(x_arr))
        return fn(float(nu_arr), float(x_arr), scaled)
    out = np.empty(nu_arr.shape)
    for idx in np.ndindex(nu_arr.shape):
        _check(nu_arr[idx], x_arr[idx])
        out[idx] = fn(float(nu_arr[idx]), float(x_arr[idx]), scaled)
    return out


def bessel_k(nu, x):
    """K_nu(x). Accepts scalars or broadcastable arrays; x must be positive."""
    return _apply(_k, nu, x, False)


def bessel_k_scaled(nu, x):
    """e^x K_nu(x), finite for large x where K_nu itself underflows."""
    return _apply(_k, nu, x, True)


def log_bessel_k(nu, x):
    """log K_nu(x), finite where K_nu over- or underflows."""
    def fn(n, v, _):
        return _log_k(n, v, True) - v
    return _apply(fn, nu, x, None)
