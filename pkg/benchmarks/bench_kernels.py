"""Time the compiled and pure-Python graph kernels on the same inputs.

    python benchmarks/bench_kernels.py [--sizes 50,100,200] [--repeat 3]
"""
import argparse
import time

import numpy as np

from mobsoc import kernels
from mobsoc.community import random_baseline


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="50,100,200", help="vertex counts (edges = 4 per vertex)")
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)
    backends = kernels.backends()
    if "cython" not in backends:
        print("compiled extension not built; only the Python backend is available")
    print(f"{'n':>6} {'m':>7} " + " ".join(f"{name:>12}" for name in backends) + "   speedup")
    for n in (int(s) for s in args.sizes.split(",")):
        g = random_baseline(n, 4 * n, seed=n)
        indptr, nbrs, eids = g.csr()
        alive = np.ones(g.n_edges, dtype=np.uint8)
        sources = np.arange(n, dtype=np.int64)
        timings, results = {}, {}
        for name, mod in backends.items():
            timings[name], results[name] = best_of(
                lambda mod=mod: mod.edge_betweenness(indptr, nbrs, eids, alive, g.n_edges, sources), args.repeat
            )
        if len(results) == 2:
            np.testing.assert_allclose(results["python"], results["cython"], rtol=1e-12)
            speedup = f"{timings['python'] / timings['cython']:8.1f}x"
        else:
            speedup = "       -"
        cells = " ".join(f"{timings[name] * 1e3:10.2f}ms" for name in backends)
        print(f"{n:>6} {g.n_edges:>7} {cells}   {speedup}")


if __name__ == "__main__":
    main()
