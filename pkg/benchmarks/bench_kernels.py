"""Compare the compiled kernels against the pure-Python reference.

Times the two hot paths on training-shaped workloads: batched matrix
exponentials (the DAG regularizer, shape S x d x d) and the greedy
feedback-arc-set ordering (DAG projection).  Run directly:

    python benchmarks/bench_kernels.py

The compiled backend must agree bit for bit with the reference, so this is
purely a speed comparison; agreement is asserted as a side effect.
"""

import time

import numpy as np

from dagdb import kernels
from dagdb.kernels import _ref


def timeit(fn, *args, repeat=5, min_rounds=3):
    best = float("inf")
    rounds = 0
    while rounds < repeat:
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
        rounds += 1
    return best


def bench_expm():
    print(f"backend in use: {kernels.BACKEND}")
    print("\nexpm_trace (S x d x d stacks)")
    print(f"{'shape':>14} {'compiled':>12} {'python':>12} {'speedup':>9}")
    rng = np.random.default_rng(0)
    for s, d in ((10, 10), (10, 30), (47, 30), (10, 100)):
        stack = (rng.random((s, d, d)) < 2.0 / d).astype(np.float64)
        tc, ec = kernels.expm_trace(stack)
        tp, ep = _ref.expm_trace(stack)
        assert (tc == tp).all() and (ec == ep).all()
        fast = timeit(kernels.expm_trace, stack)
        slow = timeit(_ref.expm_trace, stack)
        print(f"{s:>6} x{d:>3}x{d:<3} {fast * 1e3:>10.2f}ms "
              f"{slow * 1e3:>10.2f}ms {slow / fast:>8.1f}x")


def bench_gfas():
    print("\ngfas_order (single d x d digraph)")
    print(f"{'d':>14} {'compiled':>12} {'python':>12} {'speedup':>9}")
    rng = np.random.default_rng(1)
    for d in (10, 30, 100, 300):
        adj = (rng.random((d, d)) < 0.2).astype(np.int8)
        np.fill_diagonal(adj, 0)
        w = rng.normal(size=(d, d)) * adj
        assert (kernels.gfas_order(adj, w) == _ref.gfas_order(adj, w)).all()
        fast = timeit(kernels.gfas_order, adj, w)
        slow = timeit(_ref.gfas_order, adj, w)
        print(f"{d:>14} {fast * 1e3:>10.2f}ms {slow * 1e3:>10.2f}ms "
              f"{slow / fast:>8.1f}x")


if __name__ == "__main__":
    if kernels.BACKEND != "compiled":
        print("warning: compiled backend unavailable, comparing python "
              "against itself")
    bench_expm()
    bench_gfas()
