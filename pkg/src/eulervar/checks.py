"""Numerical self-checks: the weight condition A_{g,i} f_i = (0, 1) by finite
differences, generic-vs-specialised copula terms, and mixing-law Laplace
transforms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distributions import open_uniform
from .models import (ArchimedeanCopulaModel, EllipticalModel, GaussianLinearModel, IndependentModel,
                     LossModel, archimedean_alpha)
from .models.elliptical import _field

LAPLACE_TS = (0.5, 1.0, 2.0)


@dataclass(frozen=True)
class CheckResult:
    name: str
    worst: float
    tolerance: float
    detail: str = ""

    @property
    def passed(self) -> bool:
        return bool(self.worst <= self.tolerance)


def random_points(model: LossModel, n: int, rng: np.random.Generator):
    """Driver points (and mixing values for copulas) at which to run checks."""
    if isinstance(model, (GaussianLinearModel, EllipticalModel)):
        return rng.standard_normal((n, model.n_drivers)), None
    if isinstance(model, ArchimedeanCopulaModel):
        v = model.generator.sample_mixing(n, rng)
        return open_uniform(rng, (n, model.d)), v
    return open_uniform(rng, (n, model.d)), None


def vector_field(model: LossModel, i: int, drivers, mixing=None) -> np.ndarray:
    """f_i over the differentiated driver coordinates, one row per point."""
    n = drivers.shape[0]
    if isinstance(model, GaussianLinearModel):
        return np.broadcast_to(model.f[i], (n, model.n_drivers))
    if isinstance(model, EllipticalModel):
        return _field(model, i, drivers)
    if isinstance(model, IndependentModel):
        x = model.transform(drivers)
        f = np.column_stack([m.pdf(x[:, j]) for j, m in enumerate(model.marginals)]) / (model.d - 1)
        f[:, i] = 0.0
        return f
    if isinstance(model, ArchimedeanCopulaModel):
        return archimedean_alpha(model, i, drivers, mixing)
    raise TypeError(f"no vector field for {type(model).__name__}")


def _steps(model, drivers, rel):
    if isinstance(model, (GaussianLinearModel, EllipticalModel)):
        return rel * np.maximum(1.0, np.abs(drivers))
    # uniform drivers: keep u +/- h inside (0, 1)
    return rel * np.minimum(drivers, 1.0 - drivers)


def jacobian_fd(model: LossModel, drivers, mixing=None, rel_step: float = 1e-4) -> np.ndarray:
    """Central-difference Jacobian of g, shape (n, d, number of driver columns)."""
    n, k = drivers.shape
    h = _steps(model, drivers, rel_step)
    jac = np.empty((n, model.d, k))
    for m in range(k):
        up = drivers.copy()
        dn = drivers.copy()
        up[:, m] += h[:, m]
        dn[:, m] -= h[:, m]
        width = (up[:, m] - dn[:, m])[:, None]
        jac[:, :, m] = (model.transform(up, mixing) - model.transform(dn, mixing)) / width
    return jac


def structural_residuals(model: LossModel, drivers, mixing=None, rel_step: float = 1e-4) -> np.ndarray:
    """|A_{g,i} f_i - (0, 1)| per point and asset, shape (n, d, 2)."""
    jac = jacobian_fd(model, drivers, mixing, rel_step)
    out = np.empty((drivers.shape[0], model.d, 2))
    for i in range(model.d):
        f = vector_field(model, i, drivers, mixing)
        grads_f = np.einsum("njm,nm->nj", jac, f)
        out[:, i, 0] = np.abs(grads_f[:, i])
        out[:, i, 1] = np.abs(grads_f.sum(axis=1) - grads_f[:, i] - 1.0)
    return out


def check_structure(model: LossModel, points: int, rng: np.random.Generator,
                    tolerance: float = 1e-6) -> CheckResult:
    drivers, mixing = random_points(model, points, rng)
    res = structural_residuals(model, drivers, mixing)
    flat = int(np.argmax(res))
    n, i, eq = np.unravel_index(flat, res.shape)
    detail = f"worst at point {n}, asset {i}, equation {eq}: drivers={drivers[n].tolist()}"
    if mixing is not None:
        detail += f", V={mixing[n]!r}"
    return CheckResult("structural identity", float(res.max()), tolerance, detail)


def gamma_agreement(model: ArchimedeanCopulaModel, points: int, rng: np.random.Generator):
    """Max relative gap between the specialised and generic gamma_j over random points."""
    u, v = random_points(model, points, rng)
    t = -np.log(u) / v[:, None]
    g = model.generator
    closed = g.gamma(v[:, None], t)
    d1 = g.dpsi(t)
    term1, term2 = v[:, None] / d1, g.d2psi(t) / d1**2
    generic = term1 + term2
    scale = np.maximum(np.abs(generic), np.abs(term1) + np.abs(term2))
    rel = np.abs(closed - generic) / scale
    return rel, u, v


def check_gamma(model: ArchimedeanCopulaModel, points: int, rng, tolerance: float = 1e-10) -> CheckResult:
    rel, u, v = gamma_agreement(model, points, rng)
    n, j = np.unravel_index(int(np.argmax(rel)), rel.shape)
    return CheckResult("gamma closed form vs generic", float(rel.max()), tolerance,
                       f"worst at u={u[n].tolist()}, V={v[n]!r}, j={j}")


def laplace_zscores(generator, n: int, rng, ts=LAPLACE_TS) -> dict[float, float]:
    """|mean(exp(-t V)) - psi(t)| in standard errors, for each t."""
    v = generator.sample_mixing(n, rng)
    out = {}
    for t in ts:
        e = np.exp(-t * v)
        se = e.std(ddof=1) / np.sqrt(n)
        out[t] = float(abs(e.mean() - generator.psi(t)) / se)
    return out


def check_laplace(model: ArchimedeanCopulaModel, n: int, rng, n_se: float = 3.0) -> CheckResult:
    z = laplace_zscores(model.generator, n, rng)
    t_worst = max(z, key=z.get)
    return CheckResult("mixing Laplace transform (in SE)", z[t_worst], n_se, f"worst at t={t_worst}")


def run_checks(model: LossModel, points: int, rng, tolerance: float = 1e-6,
               laplace_n: int = 100_000) -> list[CheckResult]:
    results = [check_structure(model, points, rng, tolerance)]
    if isinstance(model, ArchimedeanCopulaModel):
        results.append(check_gamma(model, points, rng))
        results.append(check_laplace(model, laplace_n, rng))
    return results
