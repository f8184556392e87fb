"""One-dimensional marginals and the samplers used by the copula mixing step.

Marginals are frozen dataclasses with vectorised ``pdf``, ``logpdf``,
``score`` (d/dx log p), ``cdf``, ``quantile`` and ``isf`` (inverse survival
function).  ``score`` and ``quantile`` validate their arguments; the
underscore variants used in the hot paths do not.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import special

from . import _kernels


class DomainError(ValueError):
    """Argument outside the domain of a distribution function."""


def _as_float(x):
    return np.asarray(x, dtype=float)


def _unwrap(x, like):
    return float(np.reshape(x, -1)[0]) if np.ndim(like) == 0 else x


def normal_quantile(p):
    """Standard normal quantile, absolute error below 1e-9 on (0, 1)."""
    arr = _as_float(p)
    if not np.all((arr > 0.0) & (arr < 1.0)):
        raise DomainError("normal_quantile requires 0 < p < 1")
    out = _kernels.ndtri(arr).reshape(arr.shape)
    return _unwrap(out, p)


def normal_cdf(x):
    return special.ndtr(x)


def open_uniform(rng: np.random.Generator, size) -> np.ndarray:
    """Uniforms on the open interval (0, 1): 53-bit grid shifted by half a step."""
    return rng.random(size) + 2.0**-54


# ---------------------------------------------------------------------------


class Marginal:
    kind: str = ""
    lower: float = -math.inf

    def logpdf(self, x):
        raise NotImplementedError

    def pdf(self, x):
        return np.exp(self.logpdf(x))

    def _score(self, x):
        raise NotImplementedError

    def cdf(self, x):
        raise NotImplementedError

    def _quantile(self, u):
        raise NotImplementedError

    def _isf(self, q):
        raise NotImplementedError

    def in_support(self, x):
        x = _as_float(x)
        return np.isfinite(x) & (x >= self.lower) if self.lower > -math.inf else np.isfinite(x)

    def score(self, x):
        arr = _as_float(x)
        if not np.all(self._score_domain(arr)):
            raise DomainError(f"score of {self.kind} evaluated outside its support")
        return _unwrap(self._score(arr), x)

    def _score_domain(self, x):
        return self.in_support(x)

    def quantile(self, u):
        arr = _as_float(u)
        lo_ok = arr >= 0.0 if self.lower > -math.inf else arr > 0.0
        if not np.all(lo_ok & (arr < 1.0)):
            raise DomainError(f"quantile of {self.kind} requires u in its domain")
        return _unwrap(self._quantile(arr), u)

    def isf(self, q):
        arr = _as_float(q)
        hi_ok = arr <= 1.0 if self.lower > -math.inf else arr < 1.0
        if not np.all((arr > 0.0) & hi_ok):
            raise DomainError(f"isf of {self.kind} requires q in its domain")
        return _unwrap(self._isf(arr), q)

    def to_dict(self) -> dict:
        return {"kind": self.kind, **asdict(self)}


def _positive(name, value):
    if not (value > 0.0 and math.isfinite(value)):
        raise ValueError(f"{name} must be positive and finite, got {value!r}")


@dataclass(frozen=True)
class Normal(Marginal):
    mu: float = 0.0
    sigma: float = 1.0
    kind = "normal"

    def __post_init__(self):
        _positive("sigma", self.sigma)

    def logpdf(self, x):
        z = (_as_float(x) - self.mu) / self.sigma
        return -0.5 * z * z - math.log(self.sigma) - 0.5 * math.log(2.0 * math.pi)

    def _score(self, x):
        return -(x - self.mu) / self.sigma**2

    def cdf(self, x):
        return special.ndtr((_as_float(x) - self.mu) / self.sigma)

    def _quantile(self, u):
        return self.mu + self.sigma * _kernels.ndtri(u).reshape(u.shape)

    def _isf(self, q):
        return self.mu - self.sigma * _kernels.ndtri(q).reshape(q.shape)


@dataclass(frozen=True)
class LogNormal(Marginal):
    mu: float = 0.0
    sigma: float = 1.0
    kind = "lognormal"
    lower = 0.0

    def __post_init__(self):
        _positive("sigma", self.sigma)

    def _score_domain(self, x):
        return np.isfinite(x) & (x > 0.0)

    def logpdf(self, x):
        x = _as_float(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            lx = np.log(x)
            z = (lx - self.mu) / self.sigma
            out = -0.5 * z * z - lx - math.log(self.sigma) - 0.5 * math.log(2.0 * math.pi)
        return np.where(x > 0.0, out, -np.inf)

    def _score(self, x):
        return -((np.log(x) - self.mu) / self.sigma**2 + 1.0) / x

    def cdf(self, x):
        x = _as_float(x)
        with np.errstate(divide="ignore"):
            return np.where(x > 0.0, special.ndtr((np.log(np.maximum(x, 0.0)) - self.mu) / self.sigma), 0.0)

    def _quantile(self, u):
        out = np.zeros_like(u)
        pos = u > 0.0
        out[pos] = np.exp(self.mu + self.sigma * _kernels.ndtri(u[pos]))
        return out

    def _isf(self, q):
        out = np.zeros_like(q)
        inner = q < 1.0
        out[inner] = np.exp(self.mu - self.sigma * _kernels.ndtri(q[inner]))
        return out


@dataclass(frozen=True)
class Exponential(Marginal):
    rate: float = 1.0
    kind = "exponential"
    lower = 0.0

    def __post_init__(self):
        _positive("rate", self.rate)

    def logpdf(self, x):
        x = _as_float(x)
        return np.where(x >= 0.0, math.log(self.rate) - self.rate * x, -np.inf)

    def _score(self, x):
        return np.full_like(x, -self.rate)

    def cdf(self, x):
        x = _as_float(x)
        return np.where(x > 0.0, -np.expm1(-self.rate * np.maximum(x, 0.0)), 0.0)

    def _quantile(self, u):
        return -np.log1p(-u) / self.rate

    def _isf(self, q):
        return -np.log(q) / self.rate


@dataclass(frozen=True)
class Gamma(Marginal):
    """Gamma(shape, rate), density b^a x^(a-1) e^(-b x) / Gamma(a)."""

    shape: float = 1.0
    rate: float = 1.0
    kind = "gamma"
    lower = 0.0

    def __post_init__(self):
        _positive("shape", self.shape)
        _positive("rate", self.rate)

    def _score_domain(self, x):
        return np.isfinite(x) & (x > 0.0)

    def logpdf(self, x):
        x = _as_float(x)
        a, b = self.shape, self.rate
        with np.errstate(divide="ignore", invalid="ignore"):
            out = a * math.log(b) - math.lgamma(a) + special.xlogy(a - 1.0, x) - b * x
        return np.where(x >= 0.0, out, -np.inf)

    def _score(self, x):
        return (self.shape - 1.0) / x - self.rate

    def cdf(self, x):
        return special.gammainc(self.shape, self.rate * np.maximum(_as_float(x), 0.0))

    def _quantile(self, u):
        return special.gammaincinv(self.shape, u) / self.rate

    def _isf(self, q):
        return special.gammainccinv(self.shape, q) / self.rate


@dataclass(frozen=True)
class GPD(Marginal):
    """Generalised Pareto with shape xi > 0 and scale beta, support [0, inf)."""

    xi: float = 0.3
    beta: float = 1.0
    kind = "gpd"
    lower = 0.0

    def __post_init__(self):
        _positive("xi", self.xi)
        _positive("beta", self.beta)

    def logpdf(self, x):
        x = _as_float(x)
        with np.errstate(invalid="ignore"):
            out = -math.log(self.beta) - (1.0 / self.xi + 1.0) * np.log1p(
                self.xi * np.maximum(x, 0.0) / self.beta)
        return np.where(x >= 0.0, out, -np.inf)

    def _score(self, x):
        return -(1.0 + self.xi) / (self.beta + self.xi * x)

    def cdf(self, x):
        x = np.maximum(_as_float(x), 0.0)
        return -np.expm1(-np.log1p(self.xi * x / self.beta) / self.xi)

    def _quantile(self, u):
        return self.beta / self.xi * np.expm1(-self.xi * np.log1p(-u))

    def _isf(self, q):
        return self.beta / self.xi * np.expm1(-self.xi * np.log(q))


MARGINALS = {cls.kind: cls for cls in (Normal, LogNormal, Exponential, Gamma, GPD)}


def marginal_from_dict(spec: dict) -> Marginal:
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind not in MARGINALS:
        raise ValueError(f"unknown marginal kind {kind!r}; expected one of {sorted(MARGINALS)}")
    try:
        return MARGINALS[kind](**{k: float(v) for k, v in spec.items()})
    except TypeError as exc:
        raise ValueError(f"bad parameters for {kind} marginal: {exc}") from None


# ---------------------------------------------------------------------------
# Samplers


def gamma_variates(shape: float, rate: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """Gamma(shape, rate) variates by Marsaglia-Tsang rejection.

    Random-number consumption is fixed by the following contract, so a seed
    and ``size`` determine the output on every platform and backend:

    1. if ``shape < 1``: ``size`` uniforms for the boost factor ``U**(1/shape)``
       are drawn first and the loop runs with ``shape + 1``;
    2. rounds: with ``m`` pending slots (ascending index order), draw ``m``
       standard normals, then ``m`` uniforms; accepted slots are filled and
       the rest stay pending for the next round.
    """
    _positive("shape", shape)
    _positive("rate", rate)
    boost = None
    a = shape
    if shape < 1.0:
        boost = open_uniform(rng, size)
        a = shape + 1.0
    out = np.empty(size)
    pending = np.arange(size)
    while pending.size:
        m = pending.size
        normals = rng.standard_normal(m)
        uniforms = open_uniform(rng, m)
        values, accepted = _kernels.gamma_accept(a, normals, uniforms)
        out[pending[accepted]] = values[accepted]
        pending = pending[~accepted]
    if boost is not None:
        out *= boost ** (1.0 / shape)
    return out / rate


def sample_gamma(shape: float, rate: float, rng: np.random.Generator) -> float:
    return float(gamma_variates(shape, rate, 1, rng)[0])


def stable_scale(theta: float) -> float:
    """Nolan S1 scale of the Gumbel mixing law, (cos(pi / (2 theta)))**theta."""
    return math.cos(0.5 * math.pi / theta) ** theta


def positive_stable_variates(theta: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """Positive stable draws with Laplace transform exp(-t**(1/theta)).

    This is S(1/theta, 1, stable_scale(theta), 0; 1).  Each variate consumes
    exactly two uniforms: all ``size`` angle uniforms first, then all
    ``size`` uniforms turned into unit exponentials.
    """
    if not theta > 1.0:
        raise DomainError(f"positive stable mixing needs theta > 1, got {theta!r}")
    angles = math.pi * open_uniform(rng, size)
    expos = -np.log(open_uniform(rng, size))
    return _kernels.positive_stable(1.0 / theta, angles, expos)


def sample_positive_stable(theta: float, rng: np.random.Generator) -> float:
    return float(positive_stable_variates(theta, 1, rng)[0])
