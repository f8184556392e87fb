"""Reference computations that share no code with the package under test."""

from __future__ import annotations

import math

import numba
import numpy as np
from scipy import integrate

SQRT2PI = math.sqrt(2.0 * math.pi)


def normal_pdf(x):
    return math.exp(-0.5 * x * x) / SQRT2PI


def normal_cdf_quad(x: float) -> float:
    """Standard normal CDF by adaptive quadrature of the density."""
    part, _ = integrate.quad(normal_pdf, 0.0, abs(x), epsabs=1e-14, epsrel=1e-13)
    return 0.5 + math.copysign(part, x)


def normal_quantile_bisect(p: float, tol: float = 1e-13) -> float:
    lo, hi = -40.0, 40.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if normal_cdf_quad(mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@numba.njit(cache=True)
def kendall_tau_bruteforce(x, y):
    n = x.shape[0]
    s = 0
    for a in range(n):
        for b in range(a + 1, n):
            prod = (x[a] - x[b]) * (y[a] - y[b])
            if prod > 0:
                s += 1
            elif prod < 0:
                s -= 1
    return 2.0 * s / (n * (n - 1.0))


def levy_cdf(x, scale):
    """CDF of the one-sided stable law with index 1/2 and the given scale."""
    x = np.asarray(x, dtype=float)
    from scipy.special import erfc
    return erfc(np.sqrt(scale / (2.0 * x)))


def gaussian_es_component(cov_is, var_s, alpha):
    """E[X_i | S >= VaR_alpha] for a centred Gaussian vector, by quadrature."""
    sd = math.sqrt(var_s)
    z = normal_quantile_bisect(alpha)
    tail, _ = integrate.quad(lambda t: t * normal_pdf(t), z, math.inf)
    return cov_is / sd * tail / (1.0 - alpha)


def finite_diff(f, x, h):
    return (f(x + h) - f(x - h)) / (2.0 * h)
