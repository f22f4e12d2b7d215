#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-numpy fallback.

Times the three hot paths (ECDF sup-distance, rank-sum AUC, CART tree
growth) plus a full random-forest fit with each backend swapped in.

Usage: python benchmarks/bench_kernels.py [--quick]
"""

import argparse
import time

import numpy as np

from hdp import kernels
from hdp.model import Hyperparameters, fit_random_forest


def timeit(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_ks(impl, n_pairs, rng):
    a = np.sort(rng.normal(size=2000))
    cols = [np.sort(rng.normal(0.2, 1.1, size=900)) for _ in range(n_pairs)]

    def run():
        for b in cols:
            impl.ks_statistic(a, b)

    return run


def bench_auc(impl, n_calls, rng):
    scores = np.round(rng.normal(size=5000), 2)
    labels = (rng.random(5000) < 0.3).astype(np.uint8)
    order = np.argsort(scores, kind="stable")
    s = np.ascontiguousarray(scores[order])
    l8 = np.ascontiguousarray(labels[order])

    def run():
        for _ in range(n_calls):
            impl.auc_mann_whitney(s, l8)

    return run


def bench_tree(impl, rng, n_rows):
    X = np.ascontiguousarray(rng.normal(size=(n_rows, 3)))
    y = (X[:, 0] + 0.5 * rng.normal(size=n_rows) > 0).astype(np.uint8)
    boot = rng.integers(0, n_rows, size=n_rows, dtype=np.int64)

    def run():
        impl.grow_tree(X, y, boot, 1, 1, 12345)

    return run


def bench_forest_fit(impl, rng, n_rows, n_trees):
    X = rng.normal(size=(n_rows, 3))
    y = X[:, 0] + 0.5 * rng.normal(size=n_rows) > 0
    hp = Hyperparameters(rf_trees=n_trees, rf_seed=7)
    saved = (kernels.grow_tree, kernels.predict_forest)

    def run():
        kernels.grow_tree = impl.grow_tree
        kernels.predict_forest = impl.predict_forest
        try:
            fit_random_forest(X, y, hp).predict_proba(X)
        finally:
            kernels.grow_tree, kernels.predict_forest = saved

    return run


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--quick", action="store_true", help="smaller workloads")
    args = parser.parse_args()

    backends = kernels.backends()
    if "c" not in backends:
        print("compiled kernels not built; only the python backend is available")
        print("build with: pip install -e . --no-build-isolation")
        return

    scale = 0.25 if args.quick else 1.0
    rng = np.random.default_rng(0)
    cases = [
        ("ks_statistic x%d (2000 vs 900)" % int(400 * scale),
         lambda impl: bench_ks(impl, int(400 * scale), np.random.default_rng(1))),
        ("auc x%d (n=5000)" % int(200 * scale),
         lambda impl: bench_auc(impl, int(200 * scale), np.random.default_rng(2))),
        ("grow_tree (n=%d, p=3)" % int(8000 * scale),
         lambda impl: bench_tree(impl, np.random.default_rng(3), int(8000 * scale))),
        ("forest fit+predict (n=%d, %d trees)" % (int(4000 * scale), int(40 * scale) or 10),
         lambda impl: bench_forest_fit(impl, np.random.default_rng(4),
                                       int(4000 * scale), int(40 * scale) or 10)),
    ]
    print(f"{'case':<42} {'python':>10} {'c':>10} {'speedup':>9}")
    for name, make in cases:
        t_py = timeit(make(backends["python"]), 3)
        t_c = timeit(make(backends["c"]), 3)
        print(f"{name:<42} {t_py:>9.4f}s {t_c:>9.4f}s {t_py / t_c:>8.1f}x")


if __name__ == "__main__":
    main()
