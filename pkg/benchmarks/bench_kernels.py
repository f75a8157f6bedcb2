"""Benchmark the compiled kernels against the pure-Python fallback.

Usage: python benchmarks/bench_kernels.py [--draws N]
"""
import argparse
import math
import time

import numpy as np

from tsou import NtsParams, OuNtsParams, PathGrid, kernels
import tsou.process as process


def time_call(fn, *args, repeat=3):
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--draws", type=int, default=200_000,
                    help="variate draws per sampler benchmark")
    ap.add_argument("--paths", type=int, default=20_000,
                    help="paths for the OU-step benchmark")
    args = ap.parse_args()

    backends = {}
    for name in ("cython", "python"):
        try:
            backends[name] = kernels.get_backend(name)
        except ImportError:
            print(f"{name} backend unavailable, skipping")
    ou = OuNtsParams(nts=NtsParams(0.3, 0.3, 0.0, 2.5), b=5.0)
    grid = PathGrid.regular(1.0, 12)
    arrays = process._scheme_step_arrays(grid, ou, "exact")
    lg05 = math.lgamma(0.5)
    lg03 = math.lgamma(0.7)

    n = args.draws
    out = np.empty(n)
    rows = []
    cases = {
        "normal draws": lambda k: k.normals(1, 0, n, out),
        "inverse-gaussian draws": lambda k: k.ig_draws(1, 0, n, 0.002, 1e-5, out),
        "tempered stable (alpha=0.3)": lambda k: k.ts_draws(1, 0, n, 0.3, 0.46,
                                                            0.007, lg03, out),
        "mixture-rate draws": lambda k: k.v_draws(1, 0, n, 0.4346, 0.5, out),
    }
    path_out = np.empty((args.paths, len(grid.times)))
    cases["exact OU paths (12 monthly steps)"] = lambda k: k.ou_paths(
        1, 0, 0, args.paths, 0.0, ou.alpha, ou.sigma, lg03, *arrays, path_out)

    print(f"{'kernel':<34}" + "".join(f"{name:>14}" for name in backends)
          + f"{'speedup':>10}")
    for label, fn in cases.items():
        times = {name: time_call(fn, be) for name, be in backends.items()}
        row = f"{label:<34}"
        for name in backends:
            row += f"{times[name]:>12.3f}s"
        if len(times) == 2:
            row += f"{times['python'] / times['cython']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
