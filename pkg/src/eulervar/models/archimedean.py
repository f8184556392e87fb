from __future__ import annotations

import math

import numpy as np

from .. import _kernels
from ..distributions import (DomainError, gamma_variates, marginal_from_dict, open_uniform,
                             positive_stable_variates)
from .base import DrawBatch, LossModel, _finite


class ArchimedeanGenerator:
    """Completely monotone generator psi with its mixing law V ~ LS^{-1}(psi).

    ``gamma`` uses the specialised closed form; ``gamma_generic`` evaluates
    V / psi'(t) + psi''(t) / psi'(t)**2 directly and serves as the oracle.
    """

    name = ""
    code = -1

    def __init__(self, theta: float):
        self.theta = float(theta)

    def psi(self, t):
        raise NotImplementedError

    def dpsi(self, t):
        raise NotImplementedError

    def d2psi(self, t):
        raise NotImplementedError

    def c(self, t):
        """(log psi)'(t)."""
        raise NotImplementedError

    def dc(self, t):
        raise NotImplementedError

    def gamma(self, v, t):
        raise NotImplementedError

    def gamma_generic(self, v, t):
        d1 = self.dpsi(t)
        return v / d1 + self.d2psi(t) / d1**2

    def gamma_via_c(self, v, t):
        c = self.c(t)
        return (v / c + self.dc(t) / c**2 + 1.0) / self.psi(t)

    def sample_mixing(self, n: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def kendall_tau(self) -> float:
        raise NotImplementedError

    def to_dict(self):
        return {"generator": self.name, "theta": self.theta}


class Clayton(ArchimedeanGenerator):
    """psi(t) = (1 + t)^(-1/theta), V ~ Gamma(1/theta, 1)."""

    name = "clayton"
    code = 0

    def __init__(self, theta):
        super().__init__(theta)
        if not (self.theta > 0.0 and math.isfinite(self.theta)):
            raise ValueError("Clayton needs theta > 0")

    def psi(self, t):
        return (1.0 + t) ** (-1.0 / self.theta)

    def dpsi(self, t):
        a = 1.0 / self.theta
        return -a * (1.0 + t) ** (-a - 1.0)

    def d2psi(self, t):
        a = 1.0 / self.theta
        return a * (a + 1.0) * (1.0 + t) ** (-a - 2.0)

    def c(self, t):
        return -1.0 / (self.theta * (1.0 + t))

    def dc(self, t):
        return 1.0 / (self.theta * (1.0 + t) ** 2)

    def gamma(self, v, t):
        th = self.theta
        return (-th * v * (1.0 + t) + th + 1.0) / self.psi(t)

    def sample_mixing(self, n, rng):
        return gamma_variates(1.0 / self.theta, 1.0, n, rng)

    def kendall_tau(self):
        return self.theta / (self.theta + 2.0)


class Gumbel(ArchimedeanGenerator):
    """psi(t) = exp(-t^(1/theta)), V positive stable S(1/theta, 1, cos(pi/2theta)^theta, 0; 1)."""

    name = "gumbel"
    code = 1

    def __init__(self, theta):
        super().__init__(theta)
        if not (self.theta > 1.0 and math.isfinite(self.theta)):
            raise ValueError("Gumbel needs theta > 1 (theta = 1 is independence)")

    def psi(self, t):
        return np.exp(-(t ** (1.0 / self.theta)))

    def dpsi(self, t):
        return self.c(t) * self.psi(t)

    def d2psi(self, t):
        c = self.c(t)
        return (self.dc(t) + c * c) * self.psi(t)

    def c(self, t):
        a = 1.0 / self.theta
        return -a * t ** (a - 1.0)

    def dc(self, t):
        a = 1.0 / self.theta
        return -a * (a - 1.0) * t ** (a - 2.0)

    def gamma(self, v, t):
        th = self.theta
        return (-th * v * t ** (1.0 - 1.0 / th) + (th - 1.0) * t ** (-1.0 / th) + 1.0) / self.psi(t)

    def sample_mixing(self, n, rng):
        return positive_stable_variates(self.theta, n, rng)

    def kendall_tau(self):
        return 1.0 - 1.0 / self.theta


GENERATORS = {"clayton": Clayton, "gumbel": Gumbel}


def generator_from_dict(spec: dict) -> ArchimedeanGenerator:
    name = spec.get("generator")
    if name not in GENERATORS:
        raise ValueError(f"unknown copula generator {name!r}; expected one of {sorted(GENERATORS)}")
    return GENERATORS[name](float(spec["theta"]))


class ArchimedeanCopulaModel(LossModel):
    """Marginals glued by an Archimedean (or survival Archimedean) copula.

    Sampling follows Marshall-Olkin: V first, then d uniforms U, pseudo
    observations psi(-log U / V), flipped to 1 - psi(...) for the survival
    copula, then marginal quantiles.  The flip is folded into the inverse
    survival function so no precision is lost near 1.
    """

    family = "archimedean"

    def __init__(self, generator: ArchimedeanGenerator, marginals, survival: bool = False,
                 tag: str = "archimedean"):
        if len(marginals) < 2:
            raise ValueError("a copula model needs at least two marginals")
        self.generator = generator
        self.marginals = list(marginals)
        self.survival = bool(survival)
        self.d = len(self.marginals)
        self.n_drivers = self.d + 1
        self.tag = tag

    def pseudo_observations(self, drivers, mixing):
        """Marshall-Olkin pseudo-observations psi(-log U_j / V), before any survival flip."""
        return self.generator.psi(-np.log(drivers) / mixing[:, None])

    def transform(self, drivers, mixing=None):
        if mixing is None:
            raise ValueError("copula models need the mixing variable")
        pseudo = self.pseudo_observations(drivers, mixing)
        if self.survival:
            cols = [m._isf(pseudo[:, j]) for j, m in enumerate(self.marginals)]
        else:
            cols = [m._quantile(pseudo[:, j]) for j, m in enumerate(self.marginals)]
        return np.column_stack(cols)

    def sample(self, n, rng):
        v = self.generator.sample_mixing(n, rng)
        u = open_uniform(rng, (n, self.d))
        return DrawBatch(u, self.transform(u, v), v, self.tag)

    def densities_and_scores(self, losses):
        with np.errstate(all="ignore"):
            dens = np.column_stack([m.pdf(losses[:, j]) for j, m in enumerate(self.marginals)])
            score = np.column_stack([m._score(losses[:, j]) for j, m in enumerate(self.marginals)])
        return dens, score

    def weights(self, batch, i):
        self._check_asset(i)
        dens, score = self.densities_and_scores(batch.losses)
        pi = _kernels.archimedean_weight(self.generator.code, self.generator.theta, self.survival, i,
                                         batch.drivers, batch.mixing, dens, score)
        return _finite(pi)

    def weights_generic(self, batch, i):
        """Same weight through the generic gamma form; used to cross-check the kernels."""
        self._check_asset(i)
        dens, score = self.densities_and_scores(batch.losses)
        t = -np.log(batch.drivers) / batch.mixing[:, None]
        with np.errstate(all="ignore"):
            terms = dens * self.generator.gamma_generic(batch.mixing[:, None], t)
            terms += (1.0 if self.survival else -1.0) * score
        terms[:, i] = 0.0
        return _finite(terms.sum(axis=1))

    def to_dict(self):
        return {"family": self.family, "tag": self.tag,
                "marginals": [m.to_dict() for m in self.marginals],
                "copula": {**self.generator.to_dict(), "survival": self.survival}}

    @classmethod
    def from_dict(cls, spec):
        cop = spec["copula"]
        return cls(generator_from_dict(cop), [marginal_from_dict(m) for m in spec["marginals"]],
                   survival=bool(cop.get("survival", False)), tag=spec.get("tag", cls.family))


def archimedean_gamma(model: ArchimedeanCopulaModel, j: int, u, v, generic: bool = False):
    """gamma_j at drivers ``u`` (marginal uniforms) and mixing value ``v``."""
    u = np.asarray(u, dtype=float)
    t = -np.log(u[..., j]) / v
    if np.any(~(t > 0.0)):
        raise DomainError("gamma_j needs -log(u_j) / V > 0")
    g = model.generator
    out = g.gamma_generic(v, t) if generic else g.gamma(v, t)
    return float(out) if np.ndim(out) == 0 else out


def archimedean_alpha(model: ArchimedeanCopulaModel, i: int, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Components alpha_j of the vector field f_i (zero at j = i and at the mixing slot).

    alpha_j = -u_j V p_j(X_j) / ((k - 2) psi'(phi_j)), sign flipped for the
    survival copula.  Returned as an (n, d) array over the marginal slots.
    """
    u = np.atleast_2d(u)
    v = np.atleast_1d(v)
    x = model.transform(u, v)
    dens, _ = model.densities_and_scores(x)
    t = -np.log(u) / v[:, None]
    alpha = -u * v[:, None] * dens / ((model.d - 1) * model.generator.dpsi(t))
    if model.survival:
        alpha = -alpha
    alpha[:, i] = 0.0
    return alpha
