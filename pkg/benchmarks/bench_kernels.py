"""Compare the compiled and pure-Python kernels on identical inputs.

    python benchmarks/bench_kernels.py [--iters N] [--repeat R]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from cggm import kernels
from cggm.graph import three_vertex, neighbor_pair, star
from cggm.linalg import layout
from cggm.wishart import CGWishartParams, draw_uniforms, initial_factor


def _pair_inputs(g1, g2, iters, seed):
    small, large, (i, j) = neighbor_pair(g1, g2)
    p = small.p
    ls, ll = layout(small), layout(large)
    rng = np.random.default_rng(seed)
    S = 100.0 * np.eye(p)
    params = CGWishartParams.identity(p)
    block = 2 * ll.nfree + 1
    z = rng.standard_normal(iters * block)
    u = draw_uniforms(rng, 2 * iters * block)
    phi = np.ascontiguousarray(initial_factor(small, np.linalg.inv(params.D + S) * (3 + 100)).phi)
    omega = np.ascontiguousarray(initial_factor(large).phi)
    args = (ls.arrays(), ll.arrays(), i - 1, j - 1, ls.exponents(3.0, 100), ll.exponents(3.0, 100),
            ls.exponents(3.0), ll.exponents(3.0), params.D + S, params.D, 0.0, 0.5, 1)
    return args, phi, omega, z, u


def time_pair_chain(mod, g1, g2, iters, repeat):
    args, phi0, om0, z, u = _pair_inputs(g1, g2, iters, 0)
    best = np.inf
    for _ in range(repeat):
        phi, om = phi0.copy(), om0.copy()
        state = np.zeros(1, dtype=np.intc)
        counts = np.zeros(2, dtype=np.int64)
        acc = np.zeros(4, dtype=np.int64)
        t0 = time.perf_counter()
        mod.pair_chain(kernels.DRJ, *args, phi, om, state, counts, acc, 0, z, u, iters)
        best = min(best, time.perf_counter() - t0)
    return best, counts


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--iters", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    a = ap.parse_args()
    py = kernels.get_backend("python")
    try:
        cy = kernels.get_backend("cython")
    except ImportError:
        print("compiled extension not built; only the Python backend is available")
        cy = None
    cases = [("(e) vs (c)", three_vertex("e"), three_vertex("c")),
             ("(a) vs (b)", three_vertex("a"), three_vertex("b")),
             ("star p=8", star(8, hub_colored=False), star(8))]
    print(f"DRJ two-graph chain, {a.iters} iterations, best of {a.repeat}")
    print(f"{'case':<12} {'python s':>10} {'cython s':>10} {'speedup':>9}")
    for name, g1, g2 in cases:
        tp, cp = time_pair_chain(py, g1, g2, a.iters, a.repeat)
        if cy is None:
            print(f"{name:<12} {tp:>10.3f} {'-':>10} {'-':>9}")
            continue
        tc, cc = time_pair_chain(cy, g1, g2, a.iters, a.repeat)
        assert np.array_equal(cp, cc), "backends disagree"
        print(f"{name:<12} {tp:>10.3f} {tc:>10.4f} {tp / tc:>8.0f}x")


if __name__ == "__main__":
    main()
