"""Time the numba and numpy twins of every hot kernel on identical inputs.

    python benchmarks/bench_backends.py [--n 1000000] [--repeat 5]

Reports the best-of-``repeat`` wall time per kernel and the speed-up.
The first numba call (compilation or cache load) is excluded.
"""

import argparse
import time

import numpy as np

from eulervar import _kernels as K


def best_of(fn, args, repeat):
    fn(*args)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(n, rng):
    u = rng.random((n, 3))
    v = rng.gamma(0.5, size=n)
    dens, score = rng.random((n, 3)), rng.standard_normal((n, 3))
    s, y, w = rng.standard_normal(n), rng.standard_normal(n), rng.standard_normal(n)
    valid = np.ones(n, dtype=bool)
    return {
        "ndtri": (K.nb_ndtri, K.np_ndtri, (rng.random(n),)),
        "gamma_accept": (K.nb_gamma_accept, K.np_gamma_accept, (1.5, rng.standard_normal(n), rng.random(n))),
        "positive_stable": (K.nb_positive_stable, K.np_positive_stable,
                            (0.5, np.pi * rng.random(n), rng.exponential(size=n))),
        "archimedean_weight": (K.nb_archimedean_weight, K.np_archimedean_weight,
                               (0, 2.0, False, 0, u, v, dens, score)),
        "tail_sums": (K.nb_tail_sums, K.np_tail_sums, (s, y, w, valid, 2.3)),
        "band_sums": (K.nb_band_sums, K.np_band_sums, (s, y, 2.0, 2.1)),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=1_000_000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if not K.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    print(f"n={args.n}  repeat={args.repeat}  active backend={K.BACKEND}")
    print(f"{'kernel':<20}{'numba ms':>10}{'numpy ms':>10}{'speed-up':>10}")
    for name, (nb, npf, call_args) in cases(args.n, np.random.default_rng(args.seed)).items():
        t_nb = best_of(nb, call_args, args.repeat)
        t_np = best_of(npf, call_args, args.repeat)
        print(f"{name:<20}{1e3 * t_nb:>10.2f}{1e3 * t_np:>10.2f}{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
