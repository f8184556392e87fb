from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from .base import DrawBatch, LossModel, WeightFailure, _finite


# Radial maps phi: R -> (0, inf), strictly monotone, R = phi(Z_{d+1}).


@dataclass(frozen=True)
class ExpRadial:
    scale: float = 1.0
    rate: float = 1.0
    kind = "exp"

    def __post_init__(self):
        if not self.scale > 0.0 or self.rate == 0.0:
            raise ValueError("exp radial needs scale > 0 and rate != 0")

    def phi(self, z):
        return self.scale * np.exp(self.rate * z)

    def dphi(self, z):
        return self.rate * self.phi(z)

    def to_dict(self):
        return {"kind": self.kind, "scale": self.scale, "rate": self.rate}


class _SquaredRadial:
    """R = sqrt(Q(Phi(z))) for a law Q of R**2, so R**2 has that law exactly."""

    kind = ""

    def __init__(self, dist):
        self._dist = dist

    def phi(self, z):
        z = np.asarray(z, dtype=float)
        # Tail-accurate inversion: ppf on the left half, isf on the right.
        r2 = np.where(z <= 0.0, self._dist.ppf(special.ndtr(z)), self._dist.isf(special.ndtr(-z)))
        return np.sqrt(r2)

    def dphi(self, z):
        r = self.phi(z)
        return np.exp(-0.5 * np.asarray(z) ** 2) / np.sqrt(2.0 * np.pi) / (2.0 * r * self._dist.pdf(r * r))


class GaussianRadial(_SquaredRadial):
    """R**2 ~ chi-square(d): the elliptical model is then exactly N(mu, L L^T)."""

    kind = "gaussian"

    def __init__(self, d: int):
        self.d = d
        super().__init__(stats.chi2(d))

    def to_dict(self):
        return {"kind": self.kind}


class StudentRadial(_SquaredRadial):
    """R**2 / d ~ F(d, nu): multivariate Student t with nu degrees of freedom."""

    kind = "student_t"

    def __init__(self, d: int, nu: float):
        if not nu > 0.0:
            raise ValueError("student_t radial needs nu > 0")
        self.d = d
        self.nu = float(nu)
        super().__init__(stats.f(d, nu, scale=d))

    def to_dict(self):
        return {"kind": self.kind, "nu": self.nu}


def radial_from_dict(spec: dict, d: int):
    kind = spec.get("kind", "exp")
    if kind == "exp":
        return ExpRadial(float(spec.get("scale", 1.0)), float(spec.get("rate", 1.0)))
    if kind == "gaussian":
        return GaussianRadial(d)
    if kind == "student_t":
        return StudentRadial(d, float(spec["nu"]))
    raise ValueError(f"unknown radial kind {kind!r}")


class EllipticalModel(LossModel):
    """X = mu + phi(Z_{d+1}) L Z / |Z| with Z ~ N(0, I_d), Z_{d+1} ~ N(0, 1)."""

    family = "elliptical"
    fd_step = 1e-5

    def __init__(self, mu, L, radial, tag: str = "elliptical"):
        L = np.atleast_2d(np.asarray(L, dtype=float))
        d = L.shape[0]
        if d < 2:
            raise ValueError("an elliptical model needs d >= 2")
        if L.shape != (d, d):
            raise ValueError("L must be square")
        if not np.array_equal(L, np.tril(L)) or np.linalg.matrix_rank(L) < d:
            raise ValueError("L must be lower-triangular and full rank")
        mu = np.zeros(d) if mu is None else np.asarray(mu, dtype=float).reshape(-1)
        if mu.shape != (d,):
            raise ValueError("mu must have length d")
        self.mu, self.L, self.radial = mu, L, radial
        self.d = d
        self.n_drivers = d + 1
        self.tag = tag

    @property
    def covariance(self) -> np.ndarray:
        return self.L @ self.L.T

    def transform(self, drivers, mixing=None):
        z, zl = drivers[:, :self.d], drivers[:, self.d]
        norm = np.linalg.norm(z, axis=1)
        return self.mu + (self.radial.phi(zl) / norm)[:, None] * (z @ self.L.T)

    def sample(self, n, rng):
        z = rng.standard_normal((n, self.n_drivers))
        return DrawBatch(z, self.transform(z), None, self.tag)

    def weights(self, batch, i):
        self._check_asset(i)
        return elliptical_weights(self, i, batch.drivers)

    def to_dict(self):
        return {"family": self.family, "tag": self.tag,
                "parameters": {"mu": self.mu.tolist(), "L": self.L.tolist(),
                               "radial": self.radial.to_dict()}}

    @classmethod
    def from_dict(cls, spec):
        p = spec["parameters"]
        L = np.atleast_2d(np.asarray(p["L"], dtype=float))
        return cls(p.get("mu"), L, radial_from_dict(p.get("radial", {}), L.shape[0]),
                   tag=spec.get("tag", cls.family))


def elliptical_f(model: EllipticalModel, i: int, z, z_last):
    """Vector field (f, f_{d+1}) solving the weight condition for asset ``i``.

    f = |z| E(z) / (phi(z_{d+1}) |E(z)|^2) with E(z) = Lsum - (Lsum.z / l_i.z) l_i,
    f_{d+1} = -|z| (l_i . E) / (phi'(z_{d+1}) (l_i . z) |E|^2).

    Accepts one point (``z`` of length d) or a batch (``z`` of shape (n, d)).
    Singular points give non-finite output; ``elliptical_f`` itself never
    raises for them, callers decide.
    """
    single = np.ndim(z) == 1
    z = np.atleast_2d(np.asarray(z, dtype=float))
    zl = np.atleast_1d(np.asarray(z_last, dtype=float))
    li = model.L[i]
    lsum = model.L.sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        lz = z @ li
        E = lsum - ((z @ lsum) / lz)[:, None] * li
        e2 = np.einsum("nj,nj->n", E, E)
        nz = np.linalg.norm(z, axis=1)
        f = (nz / (model.radial.phi(zl) * e2))[:, None] * E
        f_last = -nz * (E @ li) / (model.radial.dphi(zl) * lz * e2)
    if single:
        return f[0], float(f_last[0])
    return f, f_last


def _field(model, i, drivers):
    f, f_last = elliptical_f(model, i, drivers[:, :model.d], drivers[:, model.d])
    return np.column_stack([f, f_last])


def elliptical_weights(model: EllipticalModel, i: int, drivers: np.ndarray):
    """pi_i = f . z - tr(grad f), the trace by central differences.

    The step on coordinate m is ``fd_step * max(1, |z_m|)``.
    """
    F = _field(model, i, drivers)
    pi = np.einsum("nm,nm->n", F, drivers)
    trace = np.zeros(drivers.shape[0])
    for m in range(model.n_drivers):
        h = model.fd_step * np.maximum(1.0, np.abs(drivers[:, m]))
        up = drivers.copy()
        dn = drivers.copy()
        up[:, m] += h
        dn[:, m] -= h
        with np.errstate(invalid="ignore"):
            trace += (_field(model, i, up)[:, m] - _field(model, i, dn)[:, m]) / (up[:, m] - dn[:, m])
    with np.errstate(invalid="ignore"):
        return _finite(pi - trace)


def elliptical_allocation_share(model: EllipticalModel) -> np.ndarray:
    """Allocation per unit of (VaR - sum mu) for any elliptical law: (Sigma 1)_i / 1'Sigma 1."""
    s = model.covariance.sum(axis=1)
    return s / s.sum()


__all__ = ["ExpRadial", "GaussianRadial", "StudentRadial", "EllipticalModel",
           "elliptical_f", "elliptical_weights", "elliptical_allocation_share", "WeightFailure"]
