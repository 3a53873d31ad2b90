"""Compare the compiled betweenness kernel against the pure-Python fallback.

Usage: python3 benchmarks/bench_betweenness.py [n] [edge_probability]
"""

import sys
import time

import numpy as np

from graphsom._betweenness import USING_COMPILED, brandes_csr as active
from graphsom._betweenness_py import brandes_csr as pure
from graphsom.graph import WeightedGraph


def random_graph(rng, n, p):
    labels = [str(i) for i in range(n)]
    edges = [
        (str(i), str(j), 1.0)
        for i in range(n)
        for j in range(i + 1, n)
        if rng.random() < p
    ]
    return WeightedGraph(labels, edges)


def timed(fn, indptr, indices, n, repeats=3):
    best = float("inf")
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn(indptr, indices, n)
        best = min(best, time.perf_counter() - t0)
    return best, result


def main():
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 600
    p = float(sys.argv[2]) if len(sys.argv) > 2 else 0.02
    rng = np.random.default_rng(0)
    g = random_graph(rng, n, p)
    indptr, indices = g.csr_adjacency()
    print(f"graph: n={g.n} m={g.m}  compiled extension active: {USING_COMPILED}")

    t_pure, r_pure = timed(pure, indptr, indices, g.n)
    print(f"pure python : {t_pure * 1000:9.1f} ms")
    if USING_COMPILED:
        t_fast, r_fast = timed(active, indptr, indices, g.n)
        print(f"compiled    : {t_fast * 1000:9.1f} ms  ({t_pure / t_fast:.1f}x speedup)")
        assert np.allclose(r_pure, r_fast, atol=1e-9), "implementations disagree"
        print("results agree within 1e-9")
    else:
        print("compiled extension not available; nothing to compare")


if __name__ == "__main__":
    main()
