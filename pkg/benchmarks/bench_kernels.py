#!/usr/bin/env python3
"""Time the compiled kernels against their numpy fallbacks.

Runs the two hot kernels (blocked squared distances, CSR matmul) and one
end-to-end propagation per problem size, once per backend, and prints a
table of best-of-N wall times.  Numbers are indicative only: the numpy
fallback is the portability story, the compiled path is the fast one.

    python3 benchmarks/bench_kernels.py --repeats 5
"""

import argparse
import time

import numpy as np

from jointprop import build_normalized_graph, propagate_iterative
from jointprop.kernels import HAS_NUMBA, csr_matmat, sqdist_block, warmup

SIZES = ((500, 16, 10), (2000, 32, 25), (8000, 64, 50))


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def bench_backend(backend, n, d, k, repeats, rng):
    feats = rng.normal(0.0, 2.0, size=(n, d))
    block = feats[:256]

    t_sqdist = best_of(lambda: sqdist_block(block, feats, backend=backend), repeats)

    graph = build_normalized_graph(feats, k, 4.0, backend=backend)
    cols = rng.normal(size=(n, 8))
    t_matmat = best_of(
        lambda: csr_matmat(graph.indptr, graph.indices, graph.weights, cols, backend=backend),
        repeats,
    )

    z = np.zeros((n, 4))
    z[rng.choice(n, size=max(4, n // 50), replace=False), rng.integers(0, 4, max(4, n // 50))] = 1.0
    t_prop = best_of(
        lambda: propagate_iterative(graph, z, c=0.9, tol=1e-6, backend=backend),
        max(1, repeats // 2),
    )
    return t_sqdist, t_matmat, t_prop


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5, help="best-of-N repetitions")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    backends = ["numpy"] + (["numba"] if HAS_NUMBA else [])
    if HAS_NUMBA:
        warmup()  # keep JIT compilation out of the timings
    else:
        print("numba unavailable; timing the numpy fallback only")

    header = f"{'kernel':<12} {'n':>6} {'d':>4} {'k':>4}" + "".join(
        f" {b + ' (ms)':>12}" for b in backends
    )
    if len(backends) == 2:
        header += f" {'speedup':>8}"
    print(header)
    print("-" * len(header))

    for n, d, k in SIZES:
        rng = np.random.default_rng(args.seed)
        rows = {b: bench_backend(b, n, d, k, args.repeats, rng) for b in backends}
        for idx, kernel in enumerate(("sqdist", "csr_matmat", "propagate")):
            line = f"{kernel:<12} {n:>6} {d:>4} {k:>4}"
            for b in backends:
                line += f" {rows[b][idx] * 1e3:>12.3f}"
            if len(backends) == 2:
                line += f" {rows['numpy'][idx] / rows['numba'][idx]:>7.1f}x"
            print(line)


if __name__ == "__main__":
    main()
