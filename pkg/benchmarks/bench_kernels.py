"""Compare the compiled kernel backend against the pure-Python fallback.

Runs the plastic and baseline memory-cell sequence kernels on identical
inputs under both backends and reports wall time per call and speedup.

Usage: python benchmarks/bench_kernels.py [--steps N] [--repeats N]
"""

import argparse
import time

import numpy as np

from plasticmem import kernels
from plasticmem.memory import init_memory


def time_call(fn, args, repeats):
    fn(*args)  # warm-up
    start = time.perf_counter()
    for _ in range(repeats):
        fn(*args)
    return (time.perf_counter() - start) / repeats


def plastic_args(k, l, steps, rng):
    bound = 1.0 / np.sqrt(k)
    wr, wo, ww = (rng.uniform(-bound, bound, (k, k)) for _ in range(3))
    ar, ao, aw = (rng.uniform(-0.01, 0.01, (k, k)) for _ in range(3))
    M = init_memory(l, k, "uniform", 0)
    H = np.zeros((k, k))
    X = rng.uniform(-1, 1, (steps, k))
    return (wr, ar, wo, ao, ww, aw, 0.5, M, H, H.copy(), H.copy(), X)


def baseline_args(k, l, steps, rng):
    bound = 1.0 / np.sqrt(k)
    r_wx, r_wh, w_wx, w_wh = (
        rng.uniform(-bound, bound, (4 * k, k)) for _ in range(4)
    )
    M = init_memory(l, k, "uniform", 0)
    X = rng.uniform(-1, 1, (steps, k))
    return (r_wx, r_wh, np.zeros(4 * k), w_wx, w_wh, np.zeros(4 * k), M, X)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=100)
    parser.add_argument("--repeats", type=int, default=50)
    args = parser.parse_args()

    pure = kernels.get_backend("pure")
    try:
        compiled = kernels.get_backend("compiled")
    except ImportError:
        print("compiled backend unavailable; showing pure-Python times only")
        compiled = None

    rng = np.random.default_rng(0)
    grid = [(8, 4), (16, 8), (32, 16), (64, 32)]
    print(f"{'kernel':<26}{'k':>5}{'l':>5}{'pure (ms)':>12}"
          f"{'compiled (ms)':>15}{'speedup':>9}")
    for k, l in grid:
        for name, maker in (
            ("plastic_cell_sequence", plastic_args),
            ("baseline_cell_sequence", baseline_args),
        ):
            call_args = maker(k, l, args.steps, rng)
            t_pure = time_call(getattr(pure, name), call_args, args.repeats)
            if compiled is not None:
                t_comp = time_call(
                    getattr(compiled, name), call_args, args.repeats
                )
                print(f"{name:<26}{k:>5}{l:>5}{t_pure * 1e3:>12.3f}"
                      f"{t_comp * 1e3:>15.3f}{t_pure / t_comp:>9.2f}x")
            else:
                print(f"{name:<26}{k:>5}{l:>5}{t_pure * 1e3:>12.3f}"
                      f"{'-':>15}{'-':>9}")


if __name__ == "__main__":
    main()
