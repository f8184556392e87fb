"""Hot numeric kernels.

Every kernel exists twice: a numba ``@njit`` loop (``nb_*``) and a vectorised
pure-numpy twin (``np_*``).  The public name binds to one of them at import
time.  Set ``EULERVAR_BACKEND=numpy`` to force the numpy path (useful for
debugging and for machines without numba); any other value, or no value,
selects numba when it can be imported.

Both paths consume identical inputs, so random streams never depend on the
backend; outputs agree to a few ulps (libm vs numpy transcendental functions
and summation order are the only differences).
"""

import math
import os

import numpy as np
from scipy import special

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    HAVE_NUMBA = False

BACKEND_ENV = "EULERVAR_BACKEND"


def _requested_backend():
    value = os.environ.get(BACKEND_ENV, "numba").strip().lower()
    return "numpy" if value in ("numpy", "np", "0", "off", "false") else "numba"


BACKEND = "numba" if HAVE_NUMBA and _requested_backend() == "numba" else "numpy"


def _njit(func):
    if not HAVE_NUMBA:
        return None
    return numba.njit(cache=True, nogil=True)(func)


# ---------------------------------------------------------------------------
# Standard normal quantile: Acklam's rational approximation, one Halley step.
# Only the lower half is approximated; the upper half uses symmetry because
# 1 - p is exact for p >= 0.5, whereas Phi(x) - p cancels badly near 1.

_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425
_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)

a0, a1, a2, a3, a4, a5 = _A
b0, b1, b2, b3, b4 = _B
c0, c1, c2, c3, c4, c5 = _C
d0, d1, d2, d3 = _D


def _ndtri_scalar(p):
    q = p if p <= 0.5 else 1.0 - p
    if q < _P_LOW:
        t = math.sqrt(-2.0 * math.log(q))
        x = (((((c0 * t + c1) * t + c2) * t + c3) * t + c4) * t + c5) / (
            (((d0 * t + d1) * t + d2) * t + d3) * t + 1.0)
    else:
        s = q - 0.5
        r = s * s
        x = (((((a0 * r + a1) * r + a2) * r + a3) * r + a4) * r + a5) * s / (
            ((((b0 * r + b1) * r + b2) * r + b3) * r + b4) * r + 1.0)
    # x <= 0 here, so erfc(-x / sqrt 2) is a small, accurately computed tail.
    e = 0.5 * math.erfc(-x / _SQRT2) - q
    u = e * _SQRT2PI * math.exp(0.5 * x * x)
    x = x - u / (1.0 + 0.5 * x * u)
    return x if p <= 0.5 else -x


def nb_ndtri_impl(p):
    out = np.empty(p.size)
    flat = p.ravel()
    for n in range(flat.size):
        out[n] = _ndtri_scalar_nb(flat[n])
    return out.reshape(p.shape)


_ndtri_scalar_nb = _njit(_ndtri_scalar)
nb_ndtri = _njit(nb_ndtri_impl)


def np_ndtri(p):
    p = np.asarray(p, dtype=float)
    upper = p > 0.5
    q = np.where(upper, 1.0 - p, p)
    tail = q < _P_LOW
    x = np.empty_like(q)
    if np.any(tail):
        t = np.sqrt(-2.0 * np.log(q[tail]))
        x[tail] = (((((c0 * t + c1) * t + c2) * t + c3) * t + c4) * t + c5) / (
            (((d0 * t + d1) * t + d2) * t + d3) * t + 1.0)
    mid = ~tail
    if np.any(mid):
        s = q[mid] - 0.5
        r = s * s
        x[mid] = (((((a0 * r + a1) * r + a2) * r + a3) * r + a4) * r + a5) * s / (
            ((((b0 * r + b1) * r + b2) * r + b3) * r + b4) * r + 1.0)
    e = 0.5 * special.erfc(-x / _SQRT2) - q
    u = e * _SQRT2PI * np.exp(0.5 * x * x)
    x = x - u / (1.0 + 0.5 * x * u)
    return np.where(upper, -x, x)


# ---------------------------------------------------------------------------
# Marsaglia-Tsang acceptance step for Gamma(shape >= 1, 1).


def _mt_impl(shape, normals, uniforms):
    n = normals.size
    values = np.empty(n)
    accepted = np.zeros(n, dtype=np.bool_)
    d = shape - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    for m in range(n):
        x = normals[m]
        v = 1.0 + c * x
        if v <= 0.0:
            values[m] = 0.0
            continue
        v = v * v * v
        values[m] = d * v
        if math.log(uniforms[m]) < 0.5 * x * x + d - d * v + d * math.log(v):
            accepted[m] = True
    return values, accepted


nb_gamma_accept = _njit(_mt_impl)


def np_gamma_accept(shape, normals, uniforms):
    d = shape - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    v = 1.0 + c * normals
    positive = v > 0.0
    v3 = np.where(positive, v, 1.0) ** 3
    with np.errstate(divide="ignore", invalid="ignore"):
        ok = np.log(uniforms) < 0.5 * normals**2 + d - d * v3 + d * np.log(v3)
    return np.where(positive, d * v3, 0.0), positive & ok


# ---------------------------------------------------------------------------
# Totally skewed positive stable variate with Laplace transform exp(-t**a),
# 0 < a < 1 (Chambers-Mallows-Stuck with beta = 1; the Nolan S1 scale
# cos(pi a / 2)**(1/a) cancels the CMS prefactor exactly).


def _stable_impl(a, angles, expos):
    n = angles.size
    out = np.empty(n)
    p = (1.0 - a) / a
    for m in range(n):
        t = angles[m]
        out[m] = (math.sin(a * t) / math.sin(t) ** (1.0 / a)) * (
            math.sin((1.0 - a) * t) / expos[m]) ** p
    return out


nb_positive_stable = _njit(_stable_impl)


def np_positive_stable(a, angles, expos):
    return (np.sin(a * angles) / np.sin(angles) ** (1.0 / a)) * (
        np.sin((1.0 - a) * angles) / expos) ** ((1.0 - a) / a)


# ---------------------------------------------------------------------------
# Archimedean copula weight.  gen: 0 = Clayton, 1 = Gumbel.
# pi_i = sum_{j != i} dens_j * gamma_j  -/+ score_j   (+ for survival copulas)


def _arch_impl(gen, theta, survival, i, u, v, dens, score):
    n, d = u.shape
    out = np.empty(n)
    sign = 1.0 if survival else -1.0
    for m in range(n):
        vm = v[m]
        acc = 0.0
        for j in range(d):
            if j == i:
                continue
            t = -math.log(u[m, j]) / vm
            if gen == 0:
                psi = (1.0 + t) ** (-1.0 / theta)
                g = (-theta * vm * (1.0 + t) + theta + 1.0) / psi
            else:
                psi = math.exp(-(t ** (1.0 / theta)))
                g = (-theta * vm * t ** (1.0 - 1.0 / theta)
                     + (theta - 1.0) * t ** (-1.0 / theta) + 1.0) / psi
            acc += dens[m, j] * g + sign * score[m, j]
        out[m] = acc
    return out


nb_archimedean_weight = _njit(_arch_impl)


def np_archimedean_weight(gen, theta, survival, i, u, v, dens, score):
    t = -np.log(u) / v[:, None]
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        if gen == 0:
            psi = (1.0 + t) ** (-1.0 / theta)
            g = (-theta * v[:, None] * (1.0 + t) + theta + 1.0) / psi
        else:
            psi = np.exp(-(t ** (1.0 / theta)))
            g = (-theta * v[:, None] * t ** (1.0 - 1.0 / theta)
                 + (theta - 1.0) * t ** (-1.0 / theta) + 1.0) / psi
        terms = dens * g + (1.0 if survival else -1.0) * score
    terms[:, i] = 0.0
    return terms.sum(axis=1)


# ---------------------------------------------------------------------------
# Tail and band reductions over one batch.


def _tail_impl(s, y, w, valid, threshold):
    count = 0
    excluded = 0
    syw = 0.0
    sw = 0.0
    sabs = 0.0
    for m in range(s.size):
        if s[m] >= threshold:
            if not valid[m]:
                excluded += 1
                continue
            count += 1
            syw += y[m] * w[m]
            sw += w[m]
            sabs += abs(w[m])
    return count, excluded, syw, sw, sabs


nb_tail_sums = _njit(_tail_impl)


def np_tail_sums(s, y, w, valid, threshold):
    tail = s >= threshold
    use = tail & valid
    wu = w[use]
    return (int(use.sum()), int((tail & ~valid).sum()),
            float(np.dot(y[use], wu)), float(wu.sum()), float(np.abs(wu).sum()))


def _band_impl(s, y, lo, hi):
    count = 0
    total = 0.0
    for m in range(s.size):
        if lo <= s[m] <= hi:
            count += 1
            total += y[m]
    return count, total


nb_band_sums = _njit(_band_impl)


def np_band_sums(s, y, lo, hi):
    band = (s >= lo) & (s <= hi)
    return int(band.sum()), float(y[band].sum())


# ---------------------------------------------------------------------------
# Public dispatch.

if BACKEND == "numba":

    def ndtri(p):
        p = np.asarray(p, dtype=float)
        return nb_ndtri(np.ascontiguousarray(p))

    gamma_accept = nb_gamma_accept
    positive_stable = nb_positive_stable
    tail_sums = nb_tail_sums
    band_sums = nb_band_sums

    def archimedean_weight(gen, theta, survival, i, u, v, dens, score):
        return nb_archimedean_weight(gen, float(theta), bool(survival), i,
                                     np.ascontiguousarray(u), v,
                                     np.ascontiguousarray(dens),
                                     np.ascontiguousarray(score))
else:
    ndtri = np_ndtri
    gamma_accept = np_gamma_accept
    positive_stable = np_positive_stable
    archimedean_weight = np_archimedean_weight
    tail_sums = np_tail_sums
    band_sums = np_band_sums
