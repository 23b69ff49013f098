"""Compare the compiled and pure-Python kernels.

    python3 benchmarks/bench_kernels.py [--repeat N]

Both backends are imported directly so one process can time both.
"""
import argparse
import timeit

import numpy as np

from ogm_lab import _pykernels

try:
    from ogm_lab import _ckernels
except ImportError:
    _ckernels = None


def best(fn, number, repeat):
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def cases():
    rng = np.random.default_rng(0)
    yield "theta_sweep(10^6)", lambda m: (lambda: m.theta_sweep(10**6)), 1
    for n in (4, 64, 1024):
        x, d, z = (rng.standard_normal(n) for _ in range(3))
        yield f"couple n={n}", (lambda m, x=x, d=d, z=z:
                                lambda: m.couple(x, d, z, 0.5, 0.9, 0.1, 1.3, 0.4)), 2000
        yield f"momentum n={n}", (lambda m, x=x, d=d, z=z:
                                  lambda: m.momentum(x, d, z, 0.5, 0.3, 0.6)), 2000


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    print(f"{'kernel':<22}{'python [us]':>14}{'cython [us]':>14}{'speedup':>10}")
    for name, make, number in cases():
        tp = best(make(_pykernels), number, args.repeat) * 1e6
        if _ckernels is None:
            print(f"{name:<22}{tp:>14.2f}{'n/a':>14}{'':>10}")
            continue
        tc = best(make(_ckernels), number, args.repeat) * 1e6
        print(f"{name:<22}{tp:>14.2f}{tc:>14.2f}{tp / tc:>9.1f}x")


if __name__ == "__main__":
    main()
