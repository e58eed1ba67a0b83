"""Time the numba and numpy kernel variants on identical inputs.

Run with ``python3 benchmarks/bench_kernels.py``.  Set CKNLAB_DISABLE_NUMBA=1
to check that the package falls back cleanly (the numba rows are skipped).
"""
import argparse
import time

import numpy as np

from cknlab import kernels


def best_of(fn, repeat):
    fn()  # warm-up; includes JIT compilation for the numba path
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--rows", type=int, default=1_000_000)
    parser.add_argument("--kmax", type=int, default=100_000)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    X = rng.standard_normal((args.rows, 3))
    Y = rng.standard_normal((args.rows, 3))
    V = rng.standard_normal((args.rows, 6))

    cases = {
        "kp_rows p=3": (lambda f: (lambda: f(3.0, X, Y)), "kp_rows"),
        "block_moments": (lambda f: (lambda: f(V)), "block_moments"),
        "mode_factor_table": (lambda f: (lambda: f(4.0, -0.3, args.kmax, False)), "mode_factor_table"),
    }
    print(f"backend in use: {kernels.BACKEND}")
    print(f"{'kernel':<20}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}")
    for name, (bind, attr) in cases.items():
        t_np = best_of(bind(getattr(kernels, f"{attr}_numpy")), args.repeat)
        jit = getattr(kernels, f"{attr}_numba")
        if jit is None:
            print(f"{name:<20}{t_np * 1e3:>12.2f}{'-':>12}{'-':>10}")
            continue
        t_nb = best_of(bind(jit), args.repeat)
        print(f"{name:<20}{t_np * 1e3:>12.2f}{t_nb * 1e3:>12.2f}{t_np / t_nb:>10.2f}")


if __name__ == "__main__":
    main()
