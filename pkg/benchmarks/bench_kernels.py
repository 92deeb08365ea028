#!/usr/bin/env python3
"""Benchmark the compiled nearest-neighbor kernel against the numpy fallback.

Run after an editable install:

    python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from acdc._kernels import _numpy

try:
    from acdc._kernels import _native
except ImportError:
    _native = None

# (n_query, n_candidate_vectors, d): patch-grid shapes from small fixtures up
# to encoder-sized grids (e.g. 37x37 patches at d=384)
CASES = [
    (16, 64, 8),
    (256, 1024, 64),
    (1369, 1369, 384),
]
REPEATS = 3


def bench(fn, q, c):
    fn(q, c)  # warm up
    best = np.inf
    for _ in range(REPEATS):
        t0 = time.perf_counter()
        fn(q, c)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rng = np.random.default_rng(0)
    print(f"{'case (nq x nc x d)':>24} {'numpy':>12} {'native':>12} {'speedup':>9}")
    for nq, nc, d in CASES:
        q = np.ascontiguousarray(rng.normal(size=(nq, d)))
        c = np.ascontiguousarray(rng.normal(size=(nc, d)))
        t_np = bench(_numpy.min_sqdist, q, c)
        label = f"{nq} x {nc} x {d}"
        if _native is None:
            print(f"{label:>24} {t_np * 1e3:>10.2f}ms {'absent':>12} {'-':>9}")
            continue
        t_nat = bench(_native.min_sqdist, q, c)
        np.testing.assert_allclose(
            _native.min_sqdist(q, c), _numpy.min_sqdist(q, c), rtol=1e-10
        )
        print(
            f"{label:>24} {t_np * 1e3:>10.2f}ms {t_nat * 1e3:>10.2f}ms "
            f"{t_np / t_nat:>8.1f}x"
        )


if __name__ == "__main__":
    main()
