"""JSON run configuration: model definition plus estimation grid.

Example::

    {
      "model": {
        "family": "archimedean",
        "tag": "survival-clayton-gpd",
        "marginals": [{"kind": "gpd", "xi": 0.3, "beta": 1.0}, ...],
        "copula": {"generator": "clayton", "theta": 2.0, "survival": true}
      },
      "estimation": {"alphas": [0.9, 0.99], "deltas": [1e-3], "sample_sizes": [10000],
                     "replicates": 200, "base_seed": 7, "n_pre": 1000000}
    }
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone

from . import __version__
from .experiments import DESK_REPLICATES, DESK_SAMPLE_SIZES, FULL_ALPHAS, FULL_DELTAS, ExperimentConfig
from .models import LossModel, model_from_dict

ESTIMATION_KEYS = {"alphas", "deltas", "sample_sizes", "replicates", "base_seed", "n_pre", "assets"}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    model: LossModel
    estimation: dict = field(default_factory=dict)

    def experiment(self, **overrides) -> ExperimentConfig:
        est = {**self.estimation, **overrides}
        return ExperimentConfig(
            model=self.model,
            alphas=est.get("alphas", list(FULL_ALPHAS)),
            deltas=est.get("deltas", list(FULL_DELTAS)),
            sample_sizes=est.get("sample_sizes", list(DESK_SAMPLE_SIZES)),
            replicates=int(est.get("replicates", DESK_REPLICATES)),
            base_seed=int(est.get("base_seed", 0)),
            n_pre=int(est.get("n_pre", 10**6)),
            assets=est.get("assets"),
        )

    def to_dict(self) -> dict:
        return {"model": self.model.to_dict(), "estimation": dict(self.estimation)}


def parse_config(doc: dict) -> RunConfig:
    if not isinstance(doc, dict) or "model" not in doc:
        raise ConfigError("config must be a JSON object with a 'model' entry")
    est = doc.get("estimation", {})
    if not isinstance(est, dict):
        raise ConfigError("'estimation' must be an object")
    unknown = set(est) - ESTIMATION_KEYS
    if unknown:
        raise ConfigError(f"unknown estimation keys: {sorted(unknown)}")
    try:
        model = model_from_dict(doc["model"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad model definition: {exc}") from None
    return RunConfig(model, dict(est))


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    return parse_config(doc)


def config_digest(doc: dict) -> str:
    """SHA-256 of the canonical JSON form; insensitive to key order and whitespace."""
    canon = json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


@dataclass
class RunManifest:
    config_digest: str
    base_seed: int
    version: str = __version__
    started: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())
    finished: str | None = None

    def finish(self):
        self.finished = datetime.now(timezone.utc).isoformat()

    def to_dict(self):
        return {"config_digest": self.config_digest, "tool_version": self.version,
                "base_seed": self.base_seed, "started": self.started, "finished": self.finished}
