"""Benchmark the hot kernels: numba against the pure-numpy fallback.

Run:
    python benchmarks/bench_kernels.py [--graph-n 6] [--samples 2000000]

The same comparison can be forced package-wide with BOXGAS_NO_NUMBA=1.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from boxgas import _kernels
from boxgas.potentials import hard_rod


def timeit(fn, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - start)
    return best, out


def bench_classify(n: int):
    pairs = _kernels.pair_table(n)
    rows = []
    if _kernels.HAVE_NUMBA:
        _kernels._classify_masks_nb(n, pairs)  # compile outside the clock
        t, flags_nb = timeit(lambda: _kernels._classify_masks_nb(n, pairs))
        rows.append(("numba", t, flags_nb))
    t, flags_np = timeit(lambda: _kernels._classify_masks_np(n, pairs))
    rows.append(("numpy", t, flags_np))
    if len(rows) == 2:
        assert np.array_equal(rows[0][2], rows[1][2]), "kernel mismatch"
    return [(name, t) for name, t, _ in rows]


def bench_mayer(samples: int):
    rng = np.random.default_rng(7)
    x = rng.uniform(0.0, 20.0, size=(samples, 4))
    edges_i = np.array([0, 0, 1, 2], dtype=np.int64)
    edges_j = np.array([1, 2, 2, 3], dtype=np.int64)
    params = hard_rod(1.0).mayer_params(1.0)
    rows = []
    if _kernels.HAVE_NUMBA:
        _kernels.mayer_product_batch_impl(x[:16], edges_i, edges_j, params,
                                          use_numba=True)
        t, v_nb = timeit(lambda: _kernels.mayer_product_batch_impl(
            x, edges_i, edges_j, params, use_numba=True))
        rows.append(("numba", t, v_nb))
    t, v_np = timeit(lambda: _kernels.mayer_product_batch_impl(
        x, edges_i, edges_j, params, use_numba=False))
    rows.append(("numpy", t, v_np))
    if len(rows) == 2:
        assert np.allclose(rows[0][2], rows[1][2]), "kernel mismatch"
    return [(name, t) for name, t, _ in rows]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--graph-n", type=int, default=6)
    parser.add_argument("--samples", type=int, default=2_000_000)
    args = parser.parse_args()

    print(f"numba available: {_kernels.HAVE_NUMBA} "
          f"(BOXGAS_NO_NUMBA disables it)")
    print(f"\ngraph classification, n={args.graph_n} "
          f"({1 << (args.graph_n * (args.graph_n - 1) // 2):,} masks)")
    for name, t in bench_classify(args.graph_n):
        print(f"  {name:6s} {t * 1e3:10.1f} ms")
    print(f"\nMayer products, {args.samples:,} samples x 4 edges")
    for name, t in bench_mayer(args.samples):
        print(f"  {name:6s} {t * 1e3:10.1f} ms")


if __name__ == "__main__":
    main()
