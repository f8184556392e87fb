from __future__ import annotations

import numpy as np

from .base import DrawBatch, LossModel, _finite


def gaussian_min_norm_f(L: np.ndarray, i: int) -> np.ndarray:
    """Minimum-norm f with l_i . f = 0 and (sum_j l_j - l_i) . f = 1.

    ``L`` is the d x k loading matrix with rows l_j.  Raises ``ValueError``
    when the two rows are parallel (no solution exists).
    """
    L = np.asarray(L, dtype=float)
    li = L[i]
    rest = L.sum(axis=0) - li
    A = np.vstack([li, rest])
    gram = A @ A.T
    scale = float(np.dot(li, li) * np.dot(rest, rest))
    if scale == 0.0 or abs(np.linalg.det(gram)) <= 1e-12 * scale:
        raise ValueError(f"asset {i}: row l_{i} is parallel to the sum of the other rows")
    return A.T @ np.linalg.solve(gram, np.array([0.0, 1.0]))


class GaussianLinearModel(LossModel):
    """X = mu + L Z with Z ~ N(0, I_k) and L lower-triangular of full row rank."""

    family = "gaussian"

    def __init__(self, mu, L, tag: str = "gaussian"):
        L = np.atleast_2d(np.asarray(L, dtype=float))
        d, k = L.shape
        mu = np.zeros(d) if mu is None else np.asarray(mu, dtype=float).reshape(-1)
        if d < 2:
            raise ValueError("a Gaussian model needs d >= 2")
        if k < d:
            raise ValueError("L must be d x k with k >= d")
        if mu.shape != (d,):
            raise ValueError("mu must have length d")
        if not np.array_equal(L, np.tril(L)):
            raise ValueError("L must be lower-triangular")
        if np.linalg.matrix_rank(L) < d:
            raise ValueError("L must have full row rank")
        self.mu = mu
        self.L = L
        self.d = d
        self.n_drivers = k
        self.tag = tag
        self.f = np.array([gaussian_min_norm_f(L, i) for i in range(d)])

    @property
    def covariance(self) -> np.ndarray:
        return self.L @ self.L.T

    def transform(self, drivers, mixing=None):
        return self.mu + drivers @ self.L.T

    def sample(self, n, rng):
        z = rng.standard_normal((n, self.n_drivers))
        return DrawBatch(z, self.transform(z), None, self.tag)

    def weights(self, batch, i):
        self._check_asset(i)
        return _finite(batch.drivers @ self.f[i])

    def to_dict(self):
        return {"family": self.family, "tag": self.tag,
                "parameters": {"mu": self.mu.tolist(), "L": self.L.tolist()}}

    @classmethod
    def from_dict(cls, spec):
        p = spec.get("parameters", {})
        return cls(p.get("mu"), p["L"], tag=spec.get("tag", cls.family))
