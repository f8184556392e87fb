"""VaR and VaR-contribution estimators on a single batch of draws.

Undefined estimates (empty conditioning set, ill-conditioned weight sum) are
returned as results with ``value=None`` and a status, never raised, so grid
runs can tabulate how often they occur.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _kernels
from .distributions import normal_quantile
from .models.base import DrawBatch, LossModel

OK = "ok"
UNDEFINED = "undefined"
ILL_CONDITIONED = "ill_conditioned"

DEGENERACY_RTOL = 1e-12
ILL_CONDITIONED_RTOL = 1e-12


class DegenerateWeightWarning(UserWarning):
    """All weights in the tail are equal, so the Malliavin ratio is just the tail mean."""


@dataclass(frozen=True)
class AllocationEstimate:
    asset: int
    kind: str
    value: float | None
    tail_count: int
    excluded: int = 0
    degenerate_weight: bool = False
    status: str = OK

    @property
    def defined(self) -> bool:
        return self.status == OK


def _order_index(n: int, alpha: float) -> int:
    # ceil(alpha * n) on the decimal alpha the user wrote: 0.9 means 9/10,
    # not the binary double just above it
    k = -(-(Fraction(repr(float(alpha))) * n) // 1)
    return min(max(int(k), 1), n)


def empirical_quantile(xs, alpha: float) -> float:
    """The ceil(alpha N)-th smallest value (1-based) of ``xs``."""
    xs = np.asarray(xs, dtype=float).reshape(-1)
    if xs.size == 0:
        raise ValueError("empirical_quantile of an empty sample")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    k = _order_index(xs.size, alpha) - 1
    return float(np.partition(xs, k)[k])


def empirical_quantiles(xs, alphas) -> list[float]:
    """Several order-statistic quantiles from one sort."""
    xs = np.sort(np.asarray(xs, dtype=float).reshape(-1))
    if xs.size == 0:
        raise ValueError("empirical_quantiles of an empty sample")
    out = []
    for a in alphas:
        if not 0.0 < a < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        out.append(float(xs[_order_index(xs.size, a) - 1]))
    return out


def delta_allocation(batch: DrawBatch, i: int, var_lo: float, var_hi: float) -> AllocationEstimate:
    """Mean of X_i over draws whose portfolio loss falls in [var_lo, var_hi]."""
    if var_lo > var_hi:
        raise ValueError("var_lo must not exceed var_hi")
    count, total = _kernels.band_sums(batch.portfolio, np.ascontiguousarray(batch.losses[:, i]),
                                      float(var_lo), float(var_hi))
    if count == 0:
        return AllocationEstimate(i, "delta", None, 0, status=UNDEFINED)
    return AllocationEstimate(i, "delta", total / count, int(count))


def _tail_average(s, y, var):
    # shared by tail_mean and the degenerate Malliavin branch so both agree bit for bit
    count, total = _kernels.band_sums(s, np.ascontiguousarray(y, dtype=float), float(var), math.inf)
    return int(count), (total / count if count else None)


def tail_mean(batch: DrawBatch, i: int, var: float) -> AllocationEstimate:
    """Mean of X_i over draws with portfolio loss >= var (ES-type allocation)."""
    count, value = _tail_average(batch.portfolio, batch.losses[:, i], var)
    if count == 0:
        return AllocationEstimate(i, "tail_mean", None, 0, status=UNDEFINED)
    return AllocationEstimate(i, "tail_mean", value, count)


def weighted_tail_ratio(portfolio, y, weights, var: float, valid=None, asset: int = 0,
                        warn: bool = True) -> AllocationEstimate:
    """sum(Y pi) / sum(pi) over the draws with portfolio >= var and a valid weight."""
    portfolio = np.asarray(portfolio, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    w = np.asarray(weights, dtype=float)
    valid = np.isfinite(w) if valid is None else np.asarray(valid, dtype=bool)
    w = np.where(valid, w, 0.0)
    count, excluded, syw, sw, sabs = _kernels.tail_sums(portfolio, y, w, valid, float(var))
    if count == 0:
        return AllocationEstimate(asset, "malliavin", None, 0, excluded, status=UNDEFINED)
    use = (portfolio >= var) & valid
    wu = w[use]
    mag = float(np.abs(wu).mean())
    # a single tail draw says nothing about whether the weights vary
    degenerate = count >= 2 and (mag == 0.0 or bool(wu.std() <= DEGENERACY_RTOL * mag))
    if degenerate:
        if warn:
            warnings.warn("Malliavin weights are constant on the tail; the estimate equals the "
                          "tail conditional mean (an ES-type allocation), not the VaR contribution",
                          DegenerateWeightWarning, stacklevel=3)
        _, value = _tail_average(portfolio[valid], y[valid], var)
        return AllocationEstimate(asset, "malliavin", value, int(count), int(excluded),
                                  degenerate_weight=True)
    if abs(sw) < ILL_CONDITIONED_RTOL * sabs:
        return AllocationEstimate(asset, "malliavin", None, int(count), int(excluded),
                                  status=ILL_CONDITIONED)
    return AllocationEstimate(asset, "malliavin", syw / sw, int(count), int(excluded))


def malliavin_allocation(batch: DrawBatch, model: LossModel, i: int, var: float,
                         warn: bool = True) -> AllocationEstimate:
    """Ratio estimator of E[X_i | X = var] from the tail event X >= var."""
    w, ok = model.weights(batch, i)
    return weighted_tail_ratio(batch.portfolio, batch.losses[:, i], w, var, ok, asset=i, warn=warn)


def gaussian_closed_form(L, alpha: float, exposures=None, mu=None):
    """Exact Euler VaR allocations for X ~ N(mu, L L^T), portfolio lambda . X.

    Returns ``(allocations, var)`` with allocations
    mu_i + Phi^{-1}(alpha) (Sigma lambda)_i / sqrt(lambda' Sigma lambda), so
    that lambda . allocations == var.
    """
    L = np.atleast_2d(np.asarray(L, dtype=float))
    d = L.shape[0]
    lam = np.ones(d) if exposures is None else np.asarray(exposures, dtype=float)
    mu = np.zeros(d) if mu is None else np.asarray(mu, dtype=float)
    if not np.any(lam != 0.0):
        raise ValueError("exposures must not all be zero")
    sigma = L @ L.T
    s_lam = sigma @ lam
    q = float(lam @ s_lam)
    if not q > 0.0:
        raise ValueError("portfolio variance lambda' Sigma lambda must be positive")
    z = normal_quantile(alpha)
    sd = math.sqrt(q)
    alloc = mu + z * s_lam / sd
    var = float(lam @ mu) + z * sd
    return alloc, var


def gaussian_var(L, alpha: float, mu=None) -> float:
    return gaussian_closed_form(L, alpha, mu=mu)[1]
