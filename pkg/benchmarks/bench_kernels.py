#!/usr/bin/env python3
"""Benchmark the pure-Python kernels against the compiled extension.

Times the two hot loops (subgradient training epochs and per-feature
entropy-loss scoring) at a scale representative of a real corpus, and
verifies that both backends produce identical results while timing them.

Usage:
    python benchmarks/bench_kernels.py [--quick]
"""

import argparse
import time

import numpy as np

from figseek._kernels import _py_impl

try:
    from figseek._kernels import _speedups
except ImportError:
    _speedups = None


def time_best_of(fn, repeats=3):
    best = float("inf")
    result = None
    for _ in range(repeats):
        start = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - start)
    return best, result


def bench_training(impl, X, y, epochs, seed):
    n, d = X.shape
    lam = 1.0 / n

    def run():
        rng = np.random.default_rng(seed)
        w = np.zeros(d)
        wsum = np.zeros(d)
        b, bsum, t = 0.0, 0.0, 0
        objective = 0.0
        for _ in range(epochs):
            order = rng.permutation(n).astype(np.int64)
            b, bsum, t = impl.pegasos_epoch(X, y, order, lam, w, wsum, b, bsum, t)
            objective = impl.hinge_objective(X, y, wsum / t, bsum / t, lam)
        return objective

    return time_best_of(run)


def bench_entropy(impl, presence, labels):
    out = np.zeros(presence.shape[1])

    def run():
        impl.entropy_losses(presence, labels, out)
        return out.sum()

    return time_best_of(run)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--quick", action="store_true", help="smaller workloads")
    args = parser.parse_args()

    n, d, epochs = (400, 40, 10) if args.quick else (2000, 150, 25)
    en, ek = (500, 100) if args.quick else (3000, 600)

    rng = np.random.default_rng(0)
    X = np.ascontiguousarray(rng.normal(size=(n, d)))
    y = np.where(rng.random(n) > 0.5, 1.0, -1.0)
    presence = (rng.random((en, ek)) > 0.6).astype(np.uint8)
    labels = (rng.random(en) > 0.5).astype(np.uint8)

    workloads = [
        (
            f"svm training   ({n} x {d}, {epochs} epochs)",
            lambda impl: bench_training(impl, X, y, epochs, seed=1),
        ),
        (
            f"entropy losses ({en} vectors x {ek} features)",
            lambda impl: bench_entropy(impl, presence, labels),
        ),
    ]

    print(f"{'workload':<44} {'python':>10} {'compiled':>10} {'speedup':>9}")
    for name, bench in workloads:
        py_time, py_value = bench(_py_impl)
        if _speedups is None:
            print(f"{name:<44} {py_time:>9.3f}s {'n/a':>10} {'n/a':>9}")
            continue
        c_time, c_value = bench(_speedups)
        if py_value != c_value:
            raise SystemExit(f"backend mismatch on {name}: {py_value} != {c_value}")
        print(
            f"{name:<44} {py_time:>9.3f}s {c_time:>9.3f}s {py_time / c_time:>8.1f}x"
        )
    if _speedups is None:
        print("compiled extension not available; built only the pure-Python lane")


if __name__ == "__main__":
    main()
