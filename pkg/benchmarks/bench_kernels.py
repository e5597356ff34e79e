"""Benchmark the compiled vs pure-numpy cross-covariance backends.

The squared-exponential cross-covariance assembly is the hot loop of the
elliptic design search (every candidate evaluation rebuilds Gram blocks
mixing point and negative-Laplacian functionals).  This script times both
backends on representative problem sizes and checks they agree.

Usage::

    python3 benchmarks/bench_kernels.py [--repeats 5]
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from optinfo import _kernels_np

try:
    from optinfo import _kernels_cy
except ImportError:  # pragma: no cover - extension not built
    _kernels_cy = None


def make_inputs(n_a, n_b, seed=0):
    rng = np.random.default_rng(seed)
    pts_a = rng.uniform(0.0, 1.0, (n_a, 2))
    pts_b = rng.uniform(0.0, 1.0, (n_b, 2))
    codes_a = (rng.uniform(size=n_a) < 0.5).astype(np.int64)
    codes_b = (rng.uniform(size=n_b) < 0.5).astype(np.int64)
    return pts_a, codes_a, pts_b, codes_b


def bench(backend, args, repeats):
    call = lambda: backend.se_cross_cov(*args, 1.0, 1.0)  # noqa: E731
    call()  # warm up
    return min(timeit.repeat(call, number=1, repeat=repeats))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5)
    opts = parser.parse_args()

    if _kernels_cy is None:
        print("compiled backend unavailable; timing numpy backend only")

    sizes = [(64, 64), (256, 256), (1024, 64), (1024, 1024), (4096, 256)]
    header = f"{'shape':>14} {'numpy [ms]':>12} {'compiled [ms]':>14} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for n_a, n_b in sizes:
        args = make_inputs(n_a, n_b)
        t_np = bench(_kernels_np, args, opts.repeats)
        row = f"{f'{n_a}x{n_b}':>14} {t_np * 1e3:>12.3f}"
        if _kernels_cy is not None:
            t_cy = bench(_kernels_cy, args, opts.repeats)
            ref = _kernels_np.se_cross_cov(*args, 1.0, 1.0)
            got = _kernels_cy.se_cross_cov(*args, 1.0, 1.0)
            err = float(np.max(np.abs(np.asarray(got) - ref)))
            assert err < 1e-12, f"backend mismatch: max abs diff {err}"
            row += f" {t_cy * 1e3:>14.3f} {t_np / t_cy:>7.2f}x"
        print(row)
    if _kernels_cy is not None:
        print("\nbackends agree to < 1e-12 on all benchmarked shapes")


if __name__ == "__main__":
    main()
