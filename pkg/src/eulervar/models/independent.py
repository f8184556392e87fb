from __future__ import annotations

import numpy as np

from ..distributions import Marginal, marginal_from_dict, open_uniform
from .base import DrawBatch, LossModel, _finite


class IndependentModel(LossModel):
    """X_j = F_j^{-1}(U_j) with i.i.d. uniform drivers.

    With the quantile transform as the coordinate map, the weight is
    pi_i = -sum_{j != i} p_j'(X_j) / p_j(X_j).  For exponential marginals the
    score is constant, so the weight is too.
    """

    family = "independent"

    def __init__(self, marginals: list[Marginal], tag: str = "independent"):
        if len(marginals) < 2:
            raise ValueError("an independent model needs at least two marginals")
        self.marginals = list(marginals)
        self.d = self.n_drivers = len(self.marginals)
        self.tag = tag

    def transform(self, drivers, mixing=None):
        return np.column_stack([m._quantile(drivers[:, j]) for j, m in enumerate(self.marginals)])

    def sample(self, n, rng):
        u = open_uniform(rng, (n, self.d))
        return DrawBatch(u, self.transform(u), None, self.tag)

    def scores(self, losses: np.ndarray) -> np.ndarray:
        with np.errstate(all="ignore"):
            return np.column_stack([m._score(losses[:, j]) for j, m in enumerate(self.marginals)])

    def weights(self, batch, i):
        self._check_asset(i)
        s = self.scores(batch.losses)
        s[:, i] = 0.0
        return _finite(-s.sum(axis=1))

    def to_dict(self):
        return {"family": self.family, "tag": self.tag,
                "marginals": [m.to_dict() for m in self.marginals]}

    @classmethod
    def from_dict(cls, spec):
        return cls([marginal_from_dict(m) for m in spec["marginals"]], tag=spec.get("tag", cls.family))
