"""Compare the compiled kernels with the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat N] [--size N]

Prints one line per kernel with the best-of-N wall time of each backend,
the speedup and the largest absolute difference between the results.
"""

import argparse
import timeit

import numpy as np

from horokit import _kernels_py as py
from horokit import kernels


def _points(kind, n, rng):
    r = np.sqrt(rng.uniform(0, 1, n)) * 0.999
    if kind == py.KIND_DISC:
        return (r * np.exp(2j * np.pi * rng.uniform(size=n)))[:, None]
    v = rng.normal(size=(n, 2)) + 1j * rng.normal(size=(n, 2))
    if kind == py.KIND_BALL:
        return r[:, None] * v / np.linalg.norm(v, axis=1, keepdims=True)
    if kind == py.KIND_POLYDISC:
        return np.sqrt(rng.uniform(0, 1, (n, 2))) * 0.999 * np.exp(2j * np.pi * rng.uniform(size=(n, 2)))
    w2 = v[:, 1]
    return np.stack([np.abs(w2) ** 2 + rng.exponential(size=n) + 1j * rng.normal(size=n), w2], axis=1)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--size", type=int, default=200_000)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    if kernels.BACKEND != "cython":
        print("compiled backend unavailable; timing the fallback only")
    print("%-26s %12s %12s %8s %10s" % ("kernel", "cython [ms]", "python [ms]", "speedup", "max diff"))
    names = {py.KIND_DISC: "disc", py.KIND_BALL: "ball", py.KIND_POLYDISC: "polydisc",
             py.KIND_SIEGEL: "siegel"}
    for kind, name in names.items():
        Z, W = _points(kind, args.size, rng), _points(kind, args.size, rng)
        jobs = [("pair_dist/" + name, lambda m: m.pair_dist(kind, Z, W))]
        Wm, U = Z[:4000], W[:16]
        x = _points(kind, 1, rng)[0]
        jobs.append(("window_stats/" + name, lambda m: m.window_stats(kind, Wm, U, x)[0]))
        for label, job in jobs:
            t_c = min(timeit.repeat(lambda: job(kernels), number=1, repeat=args.repeat))
            t_p = min(timeit.repeat(lambda: job(py), number=1, repeat=args.repeat))
            diff = float(np.max(np.abs(job(kernels) - job(py))))
            print("%-26s %12.2f %12.2f %8.1f %10.1e" % (label, 1e3 * t_c, 1e3 * t_p, t_p / t_c, diff))


if __name__ == "__main__":
    main()
