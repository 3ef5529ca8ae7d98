"""Timing of the compiled kernels against the numpy fallbacks.

Run with ``python benchmarks/bench_kernels.py``; prints one line per kernel
with the median time of each backend and the maximum difference.
"""

import argparse
import math
import timeit

import numpy as np

from maassjoint import _kernels_py
from maassjoint.specfun import log_gamma

try:
    from maassjoint import _kernels
except ImportError:  # extension not built
    _kernels = None


def cases():
    y = np.linspace(0.05, 6.0, 4000)
    nus = np.linspace(0.0, 30.0, 600)
    lg1 = np.asarray(log_gamma(1.0 + 1j * nus))
    ns = np.arange(1, 51)
    return {
        "kbessel_scaled(t=20.3, 4000 x)": (lambda m: m.kbessel_scaled(20.3, 2 * math.pi * y)),
        "kloosterman_table(50 n, c=997)": (lambda m: m.kloosterman_table(ns, 1, 997)),
        "jbessel_imag_scaled(600 nu, x=7)": (lambda m: m.jbessel_imag_scaled(nus, 7.0, lg1)),
    }


def _values(out):
    # some kernels return (values, error bound)
    return np.asarray(out[0] if isinstance(out, tuple) else out)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _kernels is None:
        print("compiled extension not available; only the fallback can run")
    print(f"{'kernel':36s} {'python [ms]':>12s} {'compiled [ms]':>14s} {'speedup':>8s} {'max diff':>10s}")
    for name, fn in cases().items():
        t_py = min(timeit.repeat(lambda: fn(_kernels_py), number=1, repeat=args.repeat))
        if _kernels is None:
            print(f"{name:36s} {1e3 * t_py:12.2f}")
            continue
        t_c = min(timeit.repeat(lambda: fn(_kernels), number=1, repeat=args.repeat))
        a, b = _values(fn(_kernels_py)), _values(fn(_kernels))
        diff = float(np.max(np.abs(a - b)))
        print(f"{name:36s} {1e3 * t_py:12.2f} {1e3 * t_c:14.2f} {t_py / t_c:8.1f} {diff:10.2e}")


if __name__ == "__main__":
    main()
