#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallback.

Times the three hot kernels (agglomerative linkage, best-split scan,
grouped rank correlation) on synthetic inputs of increasing size and
prints a side-by-side table with speedups. Run from anywhere:

    python3 benchmarks/compare_backends.py [--repeat N]
"""

import argparse
import time

import numpy as np
from scipy.spatial.distance import pdist, squareform

from localcontrol import _fallback

try:
    from localcontrol import _kernels
except ImportError:
    _kernels = None


def timeit(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_linkage(backend, n, rng):
    pts = rng.normal(size=(n, 4))
    dmat = squareform(pdist(pts))
    return lambda: backend.lw_linkage(dmat.copy(), _fallback.METHOD_WARD)


def bench_split(backend, n, rng):
    xs = np.sort(rng.normal(size=n))
    ys = rng.normal(size=n)
    return lambda: backend.best_split_sorted(xs, ys, 5)


def bench_spearman(backend, n, rng):
    k = max(1, n // 60)
    x = rng.normal(size=n)
    y = rng.normal(size=n)
    labels = np.sort(rng.integers(0, k, size=n))
    order = np.argsort(labels, kind="stable").astype(np.int64)
    sizes = np.bincount(labels, minlength=k)
    offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
    return lambda: backend.grouped_spearman(x, y, order, offsets)


CASES = [
    ("linkage (ward)", bench_linkage, (200, 500, 1000)),
    ("best split scan", bench_split, (10_000, 100_000, 1_000_000)),
    ("grouped spearman", bench_spearman, (3_000, 30_000, 300_000)),
]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=3,
                        help="repetitions per measurement (best is kept)")
    args = parser.parse_args()

    if _kernels is None:
        print("compiled extension not available; showing fallback only")
    header = f"{'kernel':<18}{'n':>10}{'python (s)':>14}{'compiled (s)':>14}{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for name, setup, sizes in CASES:
        for n in sizes:
            rng = np.random.default_rng(0)
            t_py = timeit(setup(_fallback, n, rng), args.repeat)
            if _kernels is not None:
                rng = np.random.default_rng(0)
                t_c = timeit(setup(_kernels, n, rng), args.repeat)
                print(f"{name:<18}{n:>10}{t_py:>14.4f}{t_c:>14.4f}{t_py / t_c:>9.1f}x")
            else:
                print(f"{name:<18}{n:>10}{t_py:>14.4f}{'-':>14}{'-':>10}")


if __name__ == "__main__":
    main()
