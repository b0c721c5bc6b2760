#!/usr/bin/env python3
"""Benchmark the compiled clustering kernels against the NumPy fallback.

Usage: python benchmarks/bench_kernels.py [--sizes 2000,8000] [--features 12]

The two backends are required to produce identical results; this script
checks that on every timed call and reports the speedups.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from abacmine import kernels


def make_data(n, m, n_values, seed):
    rng = np.random.default_rng(seed)
    X = np.ascontiguousarray(rng.integers(0, n_values, size=(n, m)),
                             dtype=np.int32)
    w = rng.integers(1, 5, size=n).astype(np.int64)
    k = 12
    modes = np.ascontiguousarray(X[rng.choice(n, size=k, replace=False)])
    labels = rng.integers(0, k, size=n).astype(np.int64)
    n_cats = np.full(m, n_values, dtype=np.int64)
    return X, w, modes, labels, n_cats, k


def timed(fn, *args, repeat=3):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


def bench(n, m, n_values):
    X, w, modes, labels, n_cats, k = make_data(n, m, n_values, seed=99)
    py = kernels.get_backend("numpy")
    try:
        cy = kernels.get_backend("compiled")
    except ImportError:
        print("compiled backend not available; nothing to compare")
        return

    cases = [
        ("assign", lambda b: (lambda: b.assign(X, modes))),
        ("update_modes",
         lambda b: (lambda: b.update_modes(X, w, labels, modes, n_cats))),
        ("member_cost",
         lambda b: (lambda: b.member_cost(X, w, labels, modes))),
        ("density", lambda b: (lambda: b.density(X, w))),
        ("dissim_matrix", lambda b: (lambda: b.dissim_matrix(X, modes))),
        ("cluster_dist_sums",
         lambda b: (lambda: b.cluster_dist_sums(X, w, labels, k))),
    ]
    print(f"\nn={n} records, m={m} features, {n_values} values/feature")
    print(f"{'kernel':<18}{'numpy (ms)':>12}{'compiled (ms)':>15}{'speedup':>9}")
    for name, build in cases:
        t_py, out_py = timed(build(py))
        t_cy, out_cy = timed(build(cy))
        assert same(out_py, out_cy), f"backend mismatch in {name}"
        print(f"{name:<18}{t_py * 1e3:>12.2f}{t_cy * 1e3:>15.2f}"
              f"{t_py / t_cy:>9.1f}x")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="2000,8000",
                        help="comma-separated record counts")
    parser.add_argument("--features", type=int, default=12)
    parser.add_argument("--values", type=int, default=5)
    args = parser.parse_args()
    print(f"active backend: {kernels.backend_name()}")
    for size in (int(s) for s in args.sizes.split(",")):
        bench(size, args.features, args.values)


if __name__ == "__main__":
    main()
