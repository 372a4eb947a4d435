"""Compare the compiled and numpy Murphy kernels.

    python3 benchmarks/bench_kernels.py --n 100000 --grid 501
"""
import argparse
import time

import numpy as np

from rvarscore import _backend
from rvarscore.core import LevelPair
from rvarscore.simulate import dgp_sample, forecaster_f, make_rng, panel_config


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--grid", type=int, default=501)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args()

    levels = LevelPair(0.1, 0.9)
    mu, y = dgp_sample(args.n, make_rng(panel_config().seed, 0))
    f = forecaster_f(mu, levels)
    cols = [np.ascontiguousarray(f[:, k]) for k in range(3)]
    grid = np.linspace(-5.0, 5.0, args.grid)

    results = {}
    for name in ("python", "cython"):
        try:
            k = _backend.get_kernels(name)
        except ImportError:
            print(f"{name:>7}: not available")
            continue
        t, out = best_of(lambda: k.murphy_sums(levels.alpha, levels.beta, *cols, y, grid), args.repeat)
        results[name] = (t, out)
        rate = args.n * args.grid / t / 1e6
        print(f"{name:>7}: {t:8.3f} s  ({rate:7.1f} M evaluations/s)")

    if len(results) == 2:
        (tp, op), (tc, oc) = results["python"], results["cython"]
        diff = max(float(np.max(np.abs(a - b))) for a, b in zip(op, oc))
        print(f"speedup {tp / tc:.1f}x, max abs difference {diff:.2e}")


if __name__ == "__main__":
    main()
