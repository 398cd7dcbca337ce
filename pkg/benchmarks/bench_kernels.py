"""Compare the compiled kernels with the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Both backends are imported directly, so one process times both.  Each
kernel is also checked for agreement before it is timed.
"""
import argparse
import sys
import timeit

import numpy as np

from bubbly import _kernels_py

try:
    from bubbly import _kernels as _kernels_c
except ImportError:  # extension not built
    _kernels_c = None

# detrended dividend economy: beta=0.5, a=3, b=1, G=1.2, G_d=1
A, B, BETA, G, GD = 3.0, 1.0, 0.5, 1.2, 1.0
Q = GD / G
XB = (BETA * A - B) / (1 + BETA)
POLE = BETA * A / (1 + BETA)
W = (1.0, 0.0)          # left eigenvector of the unstable root at D = 0


def cases():
    steps = 300
    grid = np.linspace(1e-9, POLE * (1 - 1e-9), 10_000)
    return {
        "samuelson_orbit (T=2000)":
            lambda m: m.samuelson_orbit(0.3, 0.01, A, B, BETA, Q, 2000),
        "samuelson_scan (10^4 points x 300 steps)":
            lambda m: m.samuelson_scan(grid, 0.01, A, B, BETA, Q, XB, 0.0, W[0], W[1], 0.1,
                                       0.0, POLE, steps),
        "price_recursion (T=3000)":
            lambda m: m.price_recursion(0.2, A, B, BETA, G, GD, 0.0, 3000),
        "leverage_orbit_cd (T=5000)":
            lambda m: m.leverage_orbit_cd(1.8, 0.001, 1.0, 0.3, 0.08, 0.2, 1.02, 5000),
    }


def agree(x, y):
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    both = np.isfinite(x) & np.isfinite(y)
    if not np.array_equal(np.isfinite(x), np.isfinite(y)):
        return np.inf
    if not both.any():
        return 0.0
    return float(np.max(np.abs(x[both] - y[both]) / np.maximum(1.0, np.abs(y[both]))))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if _kernels_c is None:
        print("compiled extension not available; build with "
              "`pip install --no-build-isolation -e .`", file=sys.stderr)
        return 1
    print(f"{'kernel':44s} {'python [ms]':>12s} {'cython [ms]':>12s} {'speedup':>9s} "
          f"{'max diff':>10s}")
    for name, fn in cases().items():
        diff = agree(fn(_kernels_py), fn(_kernels_c))
        t_py = min(timeit.repeat(lambda: fn(_kernels_py), number=1, repeat=args.repeat))
        t_c = min(timeit.repeat(lambda: fn(_kernels_c), number=1, repeat=args.repeat))
        print(f"{name:44s} {1e3 * t_py:12.3f} {1e3 * t_c:12.3f} {t_py / t_c:9.1f} {diff:10.2e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
