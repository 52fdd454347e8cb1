"""Benchmark: compiled kernels vs the numpy fallback.

Run: python benchmarks/bench_kernels.py [--sizes 100000,1000000,10000000]
"""

import argparse
import time

import numpy as np

from genmatte.backend import load_backend


def _time(fn, *args, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", default="100000,1000000,10000000")
    args = ap.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    backends = {}
    backends["fallback"] = load_backend("fallback")
    try:
        backends["compiled"] = load_backend("compiled")
    except ImportError:
        print("compiled backend not available; benchmarking fallback only")

    rows = []
    for n in sizes:
        x = np.random.default_rng(0).random(n)
        y = np.random.default_rng(1).random(n)
        w = np.random.default_rng(2).random(n)
        for name, mod in backends.items():
            t_norm = _time(mod.normal_fill, 12345, 0, n)
            t_lc = _time(mod.lincomb, 0.3, x, 0.7, y)
            t_lc3 = _time(mod.lincomb3, 0.3, x, 0.5, y, 0.2, w)
            rows.append((n, name, n / t_norm / 1e6, n / t_lc / 1e6, n / t_lc3 / 1e6))

    print(f"{'n':>10}  {'backend':<9} {'normals M/s':>12} {'lincomb M/s':>12} {'lincomb3 M/s':>13}")
    for n, name, rn, rl, rl3 in rows:
        print(f"{n:>10}  {name:<9} {rn:>12.1f} {rl:>12.1f} {rl3:>13.1f}")

    if len(backends) == 2:
        fb, cp = backends["fallback"], backends["compiled"]
        a = cp.normal_fill(7, 0, 100000)
        b = fb.normal_fill(7, 0, 100000)
        print(f"\ncross-backend normal agreement: max|diff| = {np.abs(a - b).max():.3e}")
        assert np.array_equal(cp.raw_uint64(7, 0, 1000), fb.raw_uint64(7, 0, 1000))
        print("raw uint64 streams identical")


if __name__ == "__main__":
    main()
