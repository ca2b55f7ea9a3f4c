"""The compiled and pure-Python kernels must agree on identical inputs."""

import numpy as np
import pytest

from cggm import kernels
from cggm.graph import three_vertex, neighbor_pair, star
from cggm.linalg import layout
from cggm.wishart import CGWishartParams, draw_uniforms, initial_factor

from .conftest import random_graph

try:
    CY = kernels.get_backend("cython")
except ImportError:  # pragma: no cover
    CY = None
PY = kernels.get_backend("python")

needs_cython = pytest.mark.skipif(CY is None, reason="compiled extension not built")


def test_backend_selected():
    assert kernels.BACKEND in {"cython", "python"}


@needs_cython
@pytest.mark.parametrize("seed", range(20))
def test_complete_and_density_agree(seed):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, int(rng.integers(1, 7)))
    lay = layout(g)
    phi0 = np.triu(rng.normal(0, 0.4, (g.p, g.p)))
    np.fill_diagonal(phi0, rng.uniform(0.5, 2, g.p))
    a, b = phi0.copy(), phi0.copy()
    sa = CY.complete(a, lay.code, lay.rep_i, lay.rep_j, 0)
    sb = PY.complete(b, lay.code, lay.rep_i, lay.rep_j, 0)
    assert sa == sb
    if sa == 0:
        np.testing.assert_array_equal(a, b)
        M = np.eye(g.p) * 2.0
        e = lay.exponents(3.0, 10)
        assert CY.log_density(a, e, M) == PY.log_density(b, e, M)


@needs_cython
@pytest.mark.parametrize("g", [three_vertex("a"), three_vertex("c"), star(5)])
def test_mh_sweeps_agree(g):
    rng = np.random.default_rng(1)
    lay = layout(g)
    phi = np.ascontiguousarray(initial_factor(g).phi)
    sweeps = 30
    z = rng.standard_normal(sweeps * lay.nfree)
    u = draw_uniforms(rng, 2 * sweeps * lay.nfree)
    M = np.eye(g.p) + 0.1
    e = lay.exponents(3.0, 5)
    a, b = phi.copy(), phi.copy()
    acc_a = CY.mh_sweeps(a, *lay.arrays(), e, M, 0.5, sweeps, z, u)
    acc_b = PY.mh_sweeps(b, *lay.arrays(), e, M, 0.5, sweeps, z, u)
    assert acc_a == acc_b
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-14)


@needs_cython
@pytest.mark.parametrize("method", [kernels.RJ, kernels.DRJ])
@pytest.mark.parametrize("pair", [("e", "c"), ("c", "d"), ("a", "b")])
def test_pair_chain_agrees(method, pair):
    small, large, (i, j) = neighbor_pair(three_vertex(pair[0]), three_vertex(pair[1]))
    ls, ll = layout(small), layout(large)
    params = CGWishartParams.identity(3)
    rng = np.random.default_rng(2)
    S = np.array([[100.0, 40, 20], [40, 100, 0], [20, 0, 100]])
    n, iters, sweeps = 100, 300, 1
    block = 2 * sweeps * ll.nfree + 1
    z = rng.standard_normal(iters * block)
    u = draw_uniforms(rng, 2 * iters * block)
    out = []
    for mod in (CY, PY):
        phi = np.ascontiguousarray(initial_factor(small, np.linalg.inv(params.D + S) * 103).phi)
        omega = np.ascontiguousarray(initial_factor(large).phi)
        state = np.zeros(1, dtype=np.intc)
        counts = np.zeros(2, dtype=np.int64)
        acc = np.zeros(4, dtype=np.int64)
        mod.pair_chain(method, ls.arrays(), ll.arrays(), i - 1, j - 1,
                       ls.exponents(3.0, n), ll.exponents(3.0, n), ls.exponents(3.0), ll.exponents(3.0),
                       params.D + S, params.D, -0.3, 0.5, sweeps, phi, omega, state, counts, acc,
                       50, z, u, iters)
        out.append((phi, omega, int(state[0]), counts.copy(), acc.copy()))
    (p1, o1, s1, c1, a1), (p2, o2, s2, c2, a2) = out
    assert s1 == s2
    np.testing.assert_array_equal(c1, c2)
    np.testing.assert_array_equal(a1, a2)
    assert c1.sum() == iters - 50
    np.testing.assert_allclose(p1, p2, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(o1, o2, rtol=1e-10, atol=1e-12)


def test_env_forces_python_backend():
    import os
    import subprocess
    import sys

    env = {**os.environ, "CGGM_BACKEND": "python"}
    out = subprocess.run([sys.executable, "-c", "from cggm import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
