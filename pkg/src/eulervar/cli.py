"""Command-line entry point: ``eulervar {var,allocate,experiment,check}``.

Exit codes: 0 success, 2 configuration error, 3 undefined estimate,
4 failed self-check.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
import time
import warnings

from . import __version__, checks
from .config import ConfigError, RunManifest, config_digest, load_config
from .estimators import (DegenerateWeightWarning, delta_allocation, empirical_quantiles,
                         gaussian_closed_form, malliavin_allocation, tail_mean)
from .experiments import (FULL_ALPHAS, FULL_DELTAS, FULL_REPLICATES, FULL_SAMPLE_SIZES,
                          STREAM_VAR, derive_seed, make_rng, run_grid, write_csv)
from .models import GaussianLinearModel

EXIT_OK, EXIT_CONFIG, EXIT_UNDEFINED, EXIT_CHECK = 0, 2, 3, 4


def _err(msg):
    print(msg, file=sys.stderr)


def _fmt(x):
    return "undefined" if x is None else f"{x:.6f}"


def _var_levels(model, levels, n_pre, seed):
    if isinstance(model, GaussianLinearModel):
        return [gaussian_closed_form(model.L, a, mu=model.mu)[1] for a in levels], "closed form"
    s = model.sample(n_pre, make_rng(derive_seed(seed, 0, 0, 0, 0, stream=STREAM_VAR))).portfolio
    return empirical_quantiles(s, levels), f"pre-run, N={n_pre}"


def _seed(run, seed):
    return int(run.estimation.get("base_seed", 0)) if seed is None else int(seed)


def cmd_var(config_path, alpha, n_pre=None, seed=None) -> int:
    try:
        run = load_config(config_path)
    except ConfigError as exc:
        _err(f"config error: {exc}")
        return EXIT_CONFIG
    n_pre = int(n_pre or run.estimation.get("n_pre", 10**6))
    (var,), source = _var_levels(run.model, [alpha], n_pre, _seed(run, seed))
    print(f"VaR_{alpha:g} = {var:.6f} ({source})")
    return EXIT_OK


def cmd_allocate(config_path, alpha, n, seed=None, delta=None, out=None) -> int:
    try:
        run = load_config(config_path)
        if not 0.0 < alpha < 1.0:
            raise ConfigError("alpha must lie in (0, 1)")
        if delta is not None and not (0.0 < alpha - delta and alpha + delta < 1.0):
            raise ConfigError("alpha +/- delta must lie in (0, 1)")
    except ConfigError as exc:
        _err(f"config error: {exc}")
        return EXIT_CONFIG
    model = run.model
    seed = _seed(run, seed)
    n_pre = int(run.estimation.get("n_pre", 10**6))
    levels = [alpha] if delta is None else [alpha, alpha - delta, alpha + delta]
    vars_, source = _var_levels(model, levels, n_pre, seed)
    var = vars_[0]
    batch = model.sample(int(n), make_rng(derive_seed(seed, 0, 0, 0, 0)))
    closed = None
    if isinstance(model, GaussianLinearModel):
        closed = gaussian_closed_form(model.L, alpha, mu=model.mu)[0]

    rows = []
    undefined = False
    degenerate = False
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateWeightWarning)
        for i in range(model.d):
            mall = malliavin_allocation(batch, model, i, var)
            tm = tail_mean(batch, i, var)
            dl = delta_allocation(batch, i, vars_[1], vars_[2]) if delta is not None else None
            undefined |= not mall.defined or (dl is not None and not dl.defined)
            degenerate |= mall.degenerate_weight
            rows.append((i, dl, mall, tm, None if closed is None else float(closed[i])))

    print(f"model={model.tag}  alpha={alpha:g}  N={n}  seed={seed}")
    print(f"VaR_{alpha:g} = {var:.6f} ({source})")
    header = ["asset"] + (["delta"] if delta is not None else []) + ["malliavin", "tail_mean"]
    header += (["closed_form"] if closed is not None else []) + ["N*_alpha"]
    header += (["N*_band"] if delta is not None else []) + ["excluded"]
    print("  ".join(f"{h:>12}" for h in header))
    for i, dl, mall, tm, cf in rows:
        cells = [str(i)] + ([_fmt(dl.value)] if dl is not None else []) + [_fmt(mall.value), _fmt(tm.value)]
        cells += ([_fmt(cf)] if cf is not None else []) + [str(mall.tail_count)]
        cells += ([str(dl.tail_count)] if dl is not None else []) + [str(mall.excluded)]
        print("  ".join(f"{c:>12}" for c in cells))
    if degenerate:
        _err("warning: Malliavin weights are constant on the tail; the malliavin column is the "
             "tail conditional mean (ES-type allocation), not the VaR contribution")
    if out:
        _write_allocation_csv(out, rows, var)
    if undefined:
        _err("error: at least one estimate is undefined (empty conditioning set or ill-conditioned weights)")
        return EXIT_UNDEFINED
    return EXIT_OK


def _write_allocation_csv(path, rows, var):
    g = "{:.17g}".format
    lines = ["asset,estimator,value,tail_count,excluded,degenerate_weight,var"]
    for i, dl, mall, tm, cf in rows:
        for kind, est in (("delta", dl), ("malliavin", mall), ("tail_mean", tm)):
            if est is None:
                continue
            value = "nan" if est.value is None else g(est.value)
            lines.append(f"{i},{kind},{value},{est.tail_count},{est.excluded},"
                         f"{int(est.degenerate_weight)},{g(var)}")
        if cf is not None:
            lines.append(f"{i},closed_form,{g(cf)},0,0,0,{g(var)}")
    _atomic_write(path, "\n".join(lines) + "\n")


def _atomic_write(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def cmd_experiment(config_path, out_csv, full_grid=False, seed=None, workers=1) -> int:
    try:
        run = load_config(config_path)
        overrides = {}
        if full_grid:
            overrides = {"alphas": list(FULL_ALPHAS), "deltas": list(FULL_DELTAS),
                         "sample_sizes": list(FULL_SAMPLE_SIZES), "replicates": FULL_REPLICATES}
        if seed is not None:
            overrides["base_seed"] = int(seed)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            config = run.experiment(**overrides)
    except (ConfigError, ValueError, TypeError) as exc:
        _err(f"config error: {exc}")
        return EXIT_CONFIG
    manifest = RunManifest(config_digest(run.to_dict()), config.base_seed)
    t0 = time.perf_counter()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", DegenerateWeightWarning)
        rows = run_grid(config, workers=workers)
    write_csv(rows, out_csv)
    manifest.finish()
    _atomic_write(f"{out_csv}.manifest.json", json.dumps(manifest.to_dict(), indent=2) + "\n")
    elapsed = time.perf_counter() - t0
    if any(issubclass(w.category, DegenerateWeightWarning) for w in caught):
        _err("warning: constant Malliavin weights; malliavin rows are tail conditional means")
    cells = len(config.alphas) * len(config.deltas) * len(config.sample_sizes)
    undefined = {k: sum(r.undefined_count for r in rows if r.estimator_kind == k)
                 for k in ("delta", "malliavin")}
    print(f"model={config.model.tag}  grid cells={cells}  replicates={config.replicates}  "
          f"rows={len(rows)}  elapsed={elapsed:.1f}s")
    print(f"undefined replicate estimates: delta={undefined['delta']}  malliavin={undefined['malliavin']}")
    print(f"wrote {out_csv}")
    return EXIT_OK


def cmd_check(config_path, points=1000, tolerance=1e-6, seed=None) -> int:
    try:
        run = load_config(config_path)
    except ConfigError as exc:
        _err(f"config error: {exc}")
        return EXIT_CONFIG
    rng = make_rng(derive_seed(_seed(run, seed), 0, 0, 0, 0, stream=2))
    results = checks.run_checks(run.model, int(points), rng, tolerance)
    failed = False
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"[{status}] {r.name}: worst={r.worst:.3e} tolerance={r.tolerance:.1e}")
        if not r.passed:
            failed = True
            print(f"       {r.detail}")
    return EXIT_CHECK if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="eulervar", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("var", help="portfolio VaR for a configured model")
    s.add_argument("--config", required=True)
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--n", type=int, default=None, help="pre-run size (default: config n_pre)")
    s.add_argument("--seed", type=int, default=None)

    s = sub.add_parser("allocate", help="per-asset VaR contributions from one batch")
    s.add_argument("--config", required=True)
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--delta", type=float, default=None)
    s.add_argument("--n", type=int, default=100_000)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--out", default=None)

    s = sub.add_parser("experiment", help="replicated delta vs Malliavin comparison grid")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--paper-grid", action="store_true",
                   help="full grid: 4 deltas, N up to 1e6, 10 000 replicates")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--workers", type=int, default=1)

    s = sub.add_parser("check", help="finite-difference and Monte Carlo self-checks")
    s.add_argument("--config", required=True)
    s.add_argument("--points", type=int, default=1000)
    s.add_argument("--tol", type=float, default=1e-6)
    s.add_argument("--seed", type=int, default=None)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "var":
        return cmd_var(args.config, args.alpha, args.n, args.seed)
    if args.command == "allocate":
        return cmd_allocate(args.config, args.alpha, args.n, args.seed, args.delta, args.out)
    if args.command == "experiment":
        return cmd_experiment(args.config, args.out, args.paper_grid, args.seed, args.workers)
    return cmd_check(args.config, args.points, args.tol, args.seed)


if __name__ == "__main__":
    sys.exit(main())
