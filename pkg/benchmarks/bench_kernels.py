#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure numpy fallback.

Covers the two hot operations (Gini split scan, KNN query) in isolation
plus the end-to-end paths that sit on them (forest fitting, KNN batch
prediction). Both backends produce bit-identical results; this script
reports the speed difference.

Usage: python benchmarks/bench_kernels.py [--json out.json]
"""

import argparse
import json
import time

import numpy as np

import phec.kernels as kernels
from phec.kernels import pure

try:
    from phec.kernels import _core
except ImportError:
    _core = None


def timeit(fn, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_split(backend, n, d, rng):
    X = np.ascontiguousarray(rng.normal(size=(n, d)))
    y = (rng.random(n) < 0.4).astype(np.uint8)
    fids = np.arange(d, dtype=np.int64)
    return timeit(lambda: backend.best_gini_split(X, y, fids))


def bench_knn(backend, n, d, q, k, rng):
    X = np.ascontiguousarray(rng.normal(size=(n, d)))
    y = (rng.random(n) < 0.4).astype(np.uint8)
    queries = rng.normal(size=(q, d))
    return timeit(lambda: backend.knn_query(X, y, queries, k))


def bench_rf_fit(backend):
    from phec.classify import rf_fit

    rng = np.random.default_rng(4)
    X = rng.normal(size=(4000, 6))
    y = (X[:, 0] + 0.5 * rng.normal(size=4000) > 0).astype(np.uint8)
    original = kernels.best_gini_split
    kernels.best_gini_split = backend.best_gini_split
    try:
        return timeit(lambda: rf_fit(X, y, trees=20, max_depth=10, seed=0), repeats=3)
    finally:
        kernels.best_gini_split = original


def bench_knn_predict(backend):
    from phec.classify import knn_fit, knn_predict_proba

    rng = np.random.default_rng(5)
    X = rng.normal(size=(25_000, 6))
    y = (rng.random(25_000) < 0.5).astype(np.uint8)
    model = knn_fit(X, y, 5)
    queries = rng.normal(size=(200, 6))
    original = kernels.knn_query
    kernels.knn_query = backend.knn_query
    try:
        return timeit(lambda: knn_predict_proba(model, queries), repeats=3)
    finally:
        kernels.knn_query = original


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--json", help="also write results as JSON")
    args = parser.parse_args()

    if _core is None:
        print("compiled kernels unavailable; rebuild the extension to compare")
        return 1

    cases = [
        ("gini_split n=1000 d=6", lambda b: bench_split(b, 1000, 6, np.random.default_rng(1))),
        ("gini_split n=20000 d=6", lambda b: bench_split(b, 20_000, 6, np.random.default_rng(2))),
        ("knn_query n=25000 q=200 k=5",
         lambda b: bench_knn(b, 25_000, 6, 200, 5, np.random.default_rng(3))),
        ("rf_fit 20 trees on 4000x6", bench_rf_fit),
        ("knn batch predict 200 queries", bench_knn_predict),
    ]

    rows = []
    header = f"{'case':<34} {'pure':>10} {'compiled':>10} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for name, fn in cases:
        t_pure = fn(pure)
        t_core = fn(_core)
        speedup = t_pure / t_core if t_core > 0 else float("inf")
        rows.append({"case": name, "pure_s": t_pure, "compiled_s": t_core, "speedup": speedup})
        print(f"{name:<34} {t_pure*1e3:>8.2f}ms {t_core*1e3:>8.2f}ms {speedup:>7.2f}x")

    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(rows, fh, indent=2)
        print(f"\nwrote {args.json}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
