"""Replicated comparison of the delta-band and Malliavin estimators.

For every (alpha, delta, N, replicate) one batch is drawn from a private
stream and fed to both estimators.  VaR levels come from the Gaussian closed
form when available, otherwise from one large pre-run per model.  Moments are
computed from stored per-replicate values, so the number of worker threads
cannot change the output.
"""

from __future__ import annotations

import csv
import logging
import math
import os
import tempfile
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .estimators import (AllocationEstimate, delta_allocation, empirical_quantiles,
                         gaussian_closed_form, malliavin_allocation, DegenerateWeightWarning)
from .models import GaussianLinearModel, LossModel

log = logging.getLogger(__name__)

MASK64 = (1 << 64) - 1
FULL_ALPHAS = (0.5, 0.9, 0.99)
FULL_DELTAS = (1e-3, 1e-4, 1e-5, 1e-6)
FULL_SAMPLE_SIZES = (10**4, int(10**4.5), 10**5, int(10**5.5), 10**6)
FULL_REPLICATES = 10_000
DESK_SAMPLE_SIZES = FULL_SAMPLE_SIZES[:3]
DESK_REPLICATES = 200

CSV_HEADER = ("model", "alpha", "delta", "N", "asset", "estimator",
              "mean", "variance", "undefined", "excluded")

STREAM_REPLICATE = 0
STREAM_VAR = 1


def _mix64(x: int) -> int:
    # splitmix64 finaliser, a bijection on 64-bit words
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def derive_seed(base_seed: int, alpha_idx: int, delta_idx: int, n_idx: int,
                replicate_idx: int, stream: int = STREAM_REPLICATE) -> int:
    """64-bit stream seed for one grid cell.

    The indices are packed into disjoint bit fields (8 bits each for the
    three grid indices, 4 for the stream tag, 36 for the replicate) and
    xor-ed into the mixed base seed, then mixed again.  Both steps are
    bijections, so distinct index tuples never share a seed.
    """
    for name, value, bits in (("alpha_idx", alpha_idx, 8), ("delta_idx", delta_idx, 8),
                              ("n_idx", n_idx, 8), ("stream", stream, 4),
                              ("replicate_idx", replicate_idx, 36)):
        if not 0 <= value < (1 << bits):
            raise ValueError(f"{name}={value} does not fit in {bits} bits")
    packed = alpha_idx | delta_idx << 8 | n_idx << 16 | stream << 24 | replicate_idx << 28
    return _mix64(_mix64(base_seed & MASK64) ^ packed)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@dataclass
class ExperimentConfig:
    model: LossModel
    alphas: list[float] = field(default_factory=lambda: list(FULL_ALPHAS))
    deltas: list[float] = field(default_factory=lambda: list(FULL_DELTAS))
    sample_sizes: list[int] = field(default_factory=lambda: list(DESK_SAMPLE_SIZES))
    replicates: int = DESK_REPLICATES
    base_seed: int = 0
    n_pre: int = 10**6
    assets: list[int] | None = None

    def __post_init__(self):
        self.alphas = [float(a) for a in self.alphas]
        self.deltas = [float(x) for x in self.deltas]
        self.sample_sizes = [int(n) for n in self.sample_sizes]
        if not self.alphas or not all(0.0 < a < 1.0 for a in self.alphas):
            raise ValueError("alphas must be non-empty and lie in (0, 1)")
        if not self.deltas or not all(x > 0.0 for x in self.deltas):
            raise ValueError("deltas must be non-empty and positive")
        for a in self.alphas:
            for x in self.deltas:
                if not (0.0 < a - x and a + x < 1.0):
                    raise ValueError(f"alpha={a} +/- delta={x} leaves (0, 1)")
        if not self.sample_sizes or min(self.sample_sizes) < 1:
            raise ValueError("sample_sizes must be positive")
        if self.replicates < 1 or self.n_pre < 1:
            raise ValueError("replicates and n_pre must be positive")
        if self.assets is None:
            self.assets = list(range(self.model.d))
        if not all(0 <= i < self.model.d for i in self.assets):
            raise ValueError("asset index out of range")
        if 1.0 - max(self.alphas) < 2.0 * max(self.deltas):
            warnings.warn("1 - alpha < 2 delta: the band event is more likely than the tail event",
                          stacklevel=2)


@dataclass(frozen=True)
class ResultRow:
    model_tag: str
    alpha: float
    delta: float
    sample_size: int
    asset: int
    estimator_kind: str
    mean_over_replicates: float
    variance_over_replicates: float
    undefined_count: int
    excluded_weight_count: int

    def csv_fields(self) -> list[str]:
        g = "{:.17g}".format
        return [self.model_tag, g(self.alpha), g(self.delta), str(self.sample_size), str(self.asset),
                self.estimator_kind, g(self.mean_over_replicates), g(self.variance_over_replicates),
                str(self.undefined_count), str(self.excluded_weight_count)]


@dataclass(frozen=True)
class ReplicateRecord:
    alpha_idx: int
    delta_idx: int
    n_idx: int
    replicate: int
    seed: int
    checksum: str
    tail_count: int
    band_count: int
    estimates: tuple[AllocationEstimate, ...]


@dataclass(frozen=True)
class VarLevels:
    var: dict[int, float]
    band: dict[tuple[int, int], tuple[float, float]]
    source: str


def precompute_var(model: LossModel, alphas, deltas, n_pre: int, base_seed: int) -> VarLevels:
    """VaR_alpha and VaR_{alpha +/- delta} for every grid point.

    Gaussian-linear models use the closed form; everything else reads order
    statistics off one pre-run of ``n_pre`` portfolio losses.
    """
    levels = {}
    for a_idx, a in enumerate(alphas):
        levels[("var", a_idx)] = a
        for d_idx, x in enumerate(deltas):
            levels[("lo", a_idx, d_idx)] = a - x
            levels[("hi", a_idx, d_idx)] = a + x
    keys = list(levels)
    if isinstance(model, GaussianLinearModel):
        values = [gaussian_closed_form(model.L, levels[k], mu=model.mu)[1] for k in keys]
        source = "closed_form"
    else:
        rng = make_rng(derive_seed(base_seed, 0, 0, 0, 0, stream=STREAM_VAR))
        s = model.sample(n_pre, rng).portfolio
        values = empirical_quantiles(s, [levels[k] for k in keys])
        source = f"pre-run N={n_pre}"
    got = dict(zip(keys, values))
    var = {a_idx: got[("var", a_idx)] for a_idx in range(len(alphas))}
    band = {(a_idx, d_idx): (got[("lo", a_idx, d_idx)], got[("hi", a_idx, d_idx)])
            for a_idx in range(len(alphas)) for d_idx in range(len(deltas))}
    return VarLevels(var, band, source)


def run_replicate(config: ExperimentConfig, levels: VarLevels, a_idx: int, d_idx: int, n_idx: int,
                  rep: int) -> ReplicateRecord:
    seed = derive_seed(config.base_seed, a_idx, d_idx, n_idx, rep)
    batch = config.model.sample(config.sample_sizes[n_idx], make_rng(seed))
    var = levels.var[a_idx]
    lo, hi = levels.band[(a_idx, d_idx)]
    s = batch.portfolio
    estimates = []
    for i in config.assets:
        estimates.append(delta_allocation(batch, i, lo, hi))
        estimates.append(malliavin_allocation(batch, config.model, i, var, warn=False))
    return ReplicateRecord(a_idx, d_idx, n_idx, rep, seed, batch.checksum(),
                           int((s >= var).sum()), int(((s >= lo) & (s <= hi)).sum()), tuple(estimates))


def _moments(values: list[float]) -> tuple[float, float]:
    if not values:
        return math.nan, math.nan
    if len(values) == 1:
        return values[0], 0.0
    arr = np.asarray(values)
    return float(arr.mean()), float(arr.var(ddof=1))


def aggregate(config: ExperimentConfig, records: list[ReplicateRecord]) -> list[ResultRow]:
    cells: dict[tuple, list[ReplicateRecord]] = {}
    for r in records:
        cells.setdefault((r.alpha_idx, r.delta_idx, r.n_idx), []).append(r)
    rows = []
    for (a_idx, d_idx, n_idx), recs in sorted(cells.items()):
        recs = sorted(recs, key=lambda r: r.replicate)
        for pos, i in enumerate(config.assets):
            for k, kind in enumerate(("delta", "malliavin")):
                ests = [r.estimates[2 * pos + k] for r in recs]
                vals = [e.value for e in ests if e.defined]
                mean, var = _moments(vals)
                rows.append(ResultRow(config.model.tag, config.alphas[a_idx], config.deltas[d_idx],
                                      config.sample_sizes[n_idx], i, kind, mean, var,
                                      len(ests) - len(vals), sum(e.excluded for e in ests)))
    return rows


def run_grid(config: ExperimentConfig, workers: int = 1,
             records: list[ReplicateRecord] | None = None) -> list[ResultRow]:
    """Run the whole grid; per-replicate records are appended to ``records`` if given."""
    levels = precompute_var(config.model, config.alphas, config.deltas, config.n_pre, config.base_seed)
    log.info("VaR levels from %s", levels.source)
    tasks = [(a, d, n, r) for a in range(len(config.alphas)) for d in range(len(config.deltas))
             for n in range(len(config.sample_sizes)) for r in range(config.replicates)]

    def task(t):
        return run_replicate(config, levels, *t)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(task, tasks))
    else:
        out = [task(t) for t in tasks]
    degenerate = any(e.degenerate_weight for r in out for e in r.estimates)
    if degenerate:
        warnings.warn("constant Malliavin weights: malliavin rows equal tail conditional means",
                      DegenerateWeightWarning, stacklevel=2)
    if records is not None:
        records.extend(out)
    return aggregate(config, out)


def write_csv(rows: list[ResultRow], path: str | os.PathLike) -> None:
    """Write rows atomically: a temporary file in the target directory, then rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", suffix=".csv", dir=directory)
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for row in rows:
                writer.writerow(row.csv_fields())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
