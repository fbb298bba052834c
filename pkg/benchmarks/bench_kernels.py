"""Benchmark the numba-compiled hot kernels against their numpy fallbacks.

Workload mirrors the heavier built-in experiment: 10-dimensional windows with
an order-3 embedding (286 monomial features).  Run with

    python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from earc import _kernels
from earc.embedding import compression_plan


def timeit(fn, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_features(plan, windows):
    out = np.empty((windows.shape[0], plan.reduced_dim))
    results = {}
    results["numpy"] = timeit(
        lambda: _kernels.monomial_features_numpy(windows, plan.lead, plan.parent, out))
    if _kernels.NUMBA_ENABLED:
        _kernels.monomial_features(windows, plan.lead, plan.parent, out)  # compile
        results["numba"] = timeit(
            lambda: _kernels.monomial_features(windows, plan.lead, plan.parent, out))
    return results


def bench_rollout(plan, coupling, seed, horizon):
    args = (coupling, plan.lead, plan.parent, seed, horizon, 2, 5, True, 1e12)
    results = {}
    results["numpy"] = timeit(lambda: _kernels.autoregress_numpy(*args), repeats=3)
    if _kernels.NUMBA_ENABLED:
        _kernels.autoregress(*args)  # compile
        results["numba"] = timeit(lambda: _kernels.autoregress(*args), repeats=3)
    return results


def main():
    rng = np.random.default_rng(0)
    plan = compression_plan(10, 3)
    windows = rng.standard_normal((20000, 10))
    print(f"monomial features: {windows.shape[0]} windows x {plan.reduced_dim} features")
    feat = bench_features(plan, windows)
    for name, t in feat.items():
        print(f"  {name:6s} {t * 1e3:9.2f} ms")
    if "numba" in feat:
        print(f"  speedup {feat['numpy'] / feat['numba']:.1f}x")

    # contractive coupling so the long rollout stays finite
    coupling = 0.01 * rng.standard_normal((10, plan.reduced_dim))
    seed = 0.1 * rng.standard_normal(10)
    horizon = 20000
    print(f"autoregressive rollout: {horizon} steps, 10-dim window")
    roll = bench_rollout(plan, coupling, seed, horizon)
    for name, t in roll.items():
        print(f"  {name:6s} {t * 1e3:9.2f} ms")
    if "numba" in roll:
        print(f"  speedup {roll['numpy'] / roll['numba']:.1f}x")
    if not _kernels.NUMBA_ENABLED:
        print("numba unavailable or disabled via EARC_NUMBA; only the numpy "
              "fallback was timed")


if __name__ == "__main__":
    main()
