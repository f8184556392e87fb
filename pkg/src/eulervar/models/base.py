from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import cached_property

import numpy as np


class WeightFailure(ArithmeticError):
    """A Malliavin weight could not be evaluated (singular point or overflow)."""


@dataclass(frozen=True, eq=False)
class DrawBatch:
    """N joint draws: driver variables, optional mixing variable, and losses.

    ``drivers`` holds uniforms (independent and copula models) or standard
    normals (Gaussian and elliptical models).  For copula models the mixing
    variable V = H(U_k) is stored in ``mixing`` instead of as a driver column.
    """

    drivers: np.ndarray
    losses: np.ndarray
    mixing: np.ndarray | None = None
    model_tag: str = ""

    def __post_init__(self):
        if self.losses.ndim != 2 or self.losses.shape[0] < 1:
            raise ValueError("losses must be an (N, d) array with N >= 1")
        if self.drivers.shape[0] != self.losses.shape[0]:
            raise ValueError("drivers and losses disagree on N")
        if not np.all(np.isfinite(self.losses)):
            raise ValueError("non-finite losses in batch")

    @property
    def n(self) -> int:
        return self.losses.shape[0]

    @property
    def d(self) -> int:
        return self.losses.shape[1]

    @cached_property
    def portfolio(self) -> np.ndarray:
        return self.losses.sum(axis=1)

    def row(self, m: int) -> DrawBatch:
        mixing = None if self.mixing is None else self.mixing[m:m + 1]
        return DrawBatch(self.drivers[m:m + 1], self.losses[m:m + 1], mixing, self.model_tag)

    def checksum(self) -> str:
        """Digest of the losses, which is everything the estimators read."""
        h = hashlib.blake2b(digest_size=16)
        h.update(np.ascontiguousarray(self.losses))
        return h.hexdigest()


class LossModel:
    """Loss vector X = g(drivers) together with its Malliavin weights.

    Subclasses define ``d``, ``n_drivers``, ``sample``, ``transform`` and
    ``weights``.  ``weights(batch, i)`` returns ``(pi, ok)`` where ``ok``
    flags the draws whose weight is finite; failed draws must be excluded by
    the caller rather than used.
    """

    family = ""
    tag = ""
    d: int
    n_drivers: int

    def sample(self, n: int, rng: np.random.Generator) -> DrawBatch:
        raise NotImplementedError

    def transform(self, drivers: np.ndarray, mixing: np.ndarray | None = None) -> np.ndarray:
        raise NotImplementedError

    def weights(self, batch: DrawBatch, i: int) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def _check_asset(self, i: int):
        if not 0 <= i < self.d:
            raise IndexError(f"asset index {i} out of range for d={self.d}")


def _finite(pi):
    ok = np.isfinite(pi)
    return np.where(ok, pi, 0.0), ok


def sample(model: LossModel, n: int, rng: np.random.Generator) -> DrawBatch:
    if n < 1:
        raise ValueError("sample size must be at least 1")
    return model.sample(int(n), rng)


def malliavin_weight(model: LossModel, i: int, batch: DrawBatch, row: int = 0) -> float:
    """Weight pi_i for one draw; raises ``WeightFailure`` instead of returning NaN."""
    pi, ok = model.weights(batch.row(row), i)
    if not ok[0]:
        raise WeightFailure(f"weight for asset {i} is not finite at row {row}")
    return float(pi[0])
