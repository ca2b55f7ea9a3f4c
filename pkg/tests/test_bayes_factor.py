import math

import numpy as np
import pytest

from cggm import _pykernels
from cggm.bayes_factor import (
    BFEstimate,
    estimate_bf,
    forward_log_ratio,
    reverse_log_ratio,
    rj_constant,
)
from cggm.graph import NotNeighbors, three_vertex, neighbor_pair
from cggm.linalg import layout
from cggm.wishart import CGWishartParams, initial_factor, log_rn

S3 = np.array([[100.0, 40, 20], [40, 100, 0], [20, 0, 100]])


def _lists(g):
    return _pykernels._lists(layout(g).arrays())


@pytest.mark.parametrize("method", ["rj", "drj"])
@pytest.mark.parametrize("pair", [("e", "c"), ("c", "d"), ("a", "b")])
def test_kernel_ratios_match_reference(method, pair):
    g1, g2 = three_vertex(pair[0]), three_vertex(pair[1])
    small, large, (i, j) = neighbor_pair(g1, g2)
    a, b = i - 1, j - 1
    params = CGWishartParams.identity(3)
    n = 100
    rng = np.random.default_rng(4)
    const = rj_constant(small, large, params)
    code = _pykernels.RJ if method == "rj" else _pykernels.DRJ
    Ls, Ll = _lists(small), _lists(large)
    e = dict(
        eps_s=list(layout(small).exponents(3.0, n)), eps_l=list(layout(large).exponents(3.0, n)),
        epr_s=list(layout(small).exponents(3.0)), epr_l=list(layout(large).exponents(3.0)),
    )
    Mp, Mq = (params.D + S3).tolist(), params.D.tolist()
    checked = 0
    for _ in range(10):
        phi = initial_factor(small, np.linalg.inv(params.D + S3) * 103).phi
        omega = initial_factor(large).phi
        zz, u1 = float(rng.standard_normal()), float(1 - rng.random())
        got = _pykernels._forward(code, phi.tolist(), omega.tolist(), Ls, Ll, a, b, a == b, a * 3 + b,
                                  e["eps_s"], e["eps_l"], e["epr_s"], e["epr_l"], Mp, Mq, const,
                                  0.5, zz, u1, 3)
        x = _pykernels._propose(phi[a, b], 0.5, a == b, zz, u1)
        want, new, new_om = forward_log_ratio(g1, g2, phi, x, params, S3, n, 0.5, method, omega)
        if got is None:
            assert want == -math.inf
            continue
        checked += 1
        assert got[0] == pytest.approx(want, abs=1e-9)
        np.testing.assert_allclose(np.array(got[1]), new, atol=1e-12)

        # reverse move from the proposed state recovers the negated ratio
        if method == "rj":
            back, old, _ = reverse_log_ratio(g1, g2, new, params, S3, n, 0.5, "rj")
            np.testing.assert_allclose(old, phi, atol=1e-12)
            assert back == pytest.approx(-want, abs=1e-9)
        else:
            back, old, old_om = reverse_log_ratio(g1, g2, new, params, S3, n, 0.5, "drj",
                                                  new_om, omega[a, b])
            np.testing.assert_allclose(old, phi, atol=1e-12)
            np.testing.assert_allclose(old_om, omega, atol=1e-12)
            assert back == pytest.approx(-want, abs=1e-9)
    assert checked >= 5


def test_estimate_close_to_exact():
    g1, g2 = three_vertex("e"), three_vertex("c")
    params = CGWishartParams.identity(3)
    exact = math.exp(log_rn(g2, g1, params, S3, 100))
    for method in ("rj", "drj"):
        est = estimate_bf(g1, g2, S3, 100, params, method, 20_000, 1_000, replicates=8, seed=11)
        assert not est.degenerate
        assert abs(est.value - exact) < 4 * est.std_error
        assert sum(est.counts) == 8 * 19_000


def test_orientation_and_reciprocity():
    g1, g2 = three_vertex("e"), three_vertex("c")
    a = estimate_bf(g1, g2, S3, 100, iters=3000, burnin=100, replicates=2, seed=3)
    b = estimate_bf(g2, g1, S3, 100, iters=3000, burnin=100, replicates=2, seed=3)
    # same chain, opposite orientation
    assert a.counts == b.counts[::-1]
    assert a.value * b.value == pytest.approx(1.0)


def test_seeded_reproducibility_and_threads():
    g1, g2 = three_vertex("c"), three_vertex("d")
    a = estimate_bf(g1, g2, S3, 100, iters=2000, burnin=100, replicates=4, seed=9)
    b = estimate_bf(g1, g2, S3, 100, iters=2000, burnin=100, replicates=4, seed=9, threads=4)
    assert a.counts == b.counts and a.replicate_values == b.replicate_values


def test_degenerate_counts():
    # one counted iteration can only visit one graph
    est = estimate_bf(three_vertex("e"), three_vertex("c"), S3, 100, iters=2, burnin=1, replicates=1, seed=0)
    assert est.degenerate
    assert math.isnan(est.std_error) and est.value in (0.0, math.inf)
    assert sum(est.counts) == 1


@pytest.mark.parametrize(
    "kwargs",
    [dict(method="mh"), dict(iters=10, burnin=10), dict(sigma=0.0), dict(replicates=0)],
)
def test_bad_arguments(kwargs):
    with pytest.raises(ValueError):
        estimate_bf(three_vertex("e"), three_vertex("c"), S3, 100, **kwargs)


def test_not_neighbors():
    with pytest.raises(NotNeighbors):
        estimate_bf(three_vertex("e"), three_vertex("b"), S3, 100)
