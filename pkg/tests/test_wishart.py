import math
import zlib

import numpy as np
import pytest
from scipy import stats

from cggm.graph import ColoredGraph, three_vertex, free_elements, star
from cggm.linalg import CompletionInfeasible, complete, reconstruct_K
from cggm.wishart import (
    CGWishartParams,
    DimensionTooLarge,
    Unsupported,
    exact_log_norm_const,
    initial_factor,
    log_jacobian,
    log_rn,
    log_unnorm_density_K,
    log_unnorm_density_phi,
    numeric_log_norm_const,
    numeric_log_norm_const_detail,
    sample,
)

from .conftest import random_free_values, random_graph


def random_spd(rng, p, scale=1.0):
    A = rng.normal(size=(p, p))
    return scale * (A @ A.T / p + np.eye(p))


CLOSED_FORM_GRAPHS = {
    "empty": ColoredGraph(3, [[1, 3], [2]], []),
    "three_vertexa": three_vertex("a"),
    "three_vertexb": three_vertex("b"),
    "three_vertexc": three_vertex("c"),
    "three_vertexd": three_vertex("d"),
    "three_vertexe": three_vertex("e"),
    "star4-hub": star(4),
    "star4-one-class": star(4, hub_colored=False),
    "uncolored-star": ColoredGraph.uncolored(4, [(1, 4), (2, 4), (3, 4)]),
}


@pytest.mark.parametrize("name", sorted(CLOSED_FORM_GRAPHS))
@pytest.mark.parametrize("delta", [12.0, 40.0])
def test_exact_matches_quadrature(name, delta):
    # concentrated, posterior-like parameters keep the mass off the
    # completion boundary where Gauss-Hermite converges slowly
    g = CLOSED_FORM_GRAPHS[name]
    rng = np.random.default_rng(zlib.crc32(name.encode()))
    params = CGWishartParams(delta, random_spd(rng, g.p, scale=delta / 4))
    if g.n_classes > 5:
        pytest.skip("beyond the quadrature dimension limit")
    exact = exact_log_norm_const(g, params)
    num = numeric_log_norm_const(g, params)
    assert abs(math.expm1(num - exact)) < 1e-4


def test_one_vertex_is_gamma():
    params = CGWishartParams(5.0, np.array([[2.0]]))
    g = ColoredGraph.empty(1)
    # integral of k^{(d-2)/2} exp(-k D/2) dk = Gamma(d/2) (2/D)^{d/2}
    want = math.lgamma(2.5) + 2.5 * math.log(1.0)
    assert exact_log_norm_const(g, params) == pytest.approx(want, abs=1e-12)


def test_posterior_rn_is_antisymmetric(rng):
    S = random_spd(rng, 3) * 50
    params = CGWishartParams.identity(3)
    a = log_rn(three_vertex("c"), three_vertex("e"), params, S, 50)
    b = log_rn(three_vertex("e"), three_vertex("c"), params, S, 50)
    assert a == pytest.approx(-b, abs=1e-12)


def test_unsupported_and_too_large():
    g = ColoredGraph(4, [[1, 2], [3, 4]], [[(1, 2), (3, 4)], [(2, 3)]])
    params = CGWishartParams.identity(4)
    with pytest.raises(Unsupported):
        exact_log_norm_const(g, params)
    with pytest.raises(DimensionTooLarge):
        numeric_log_norm_const_detail(ColoredGraph.complete(4), CGWishartParams.identity(4))


@pytest.mark.parametrize("seed", range(10))
def test_density_identity(seed):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, int(rng.integers(1, 6)))
    params = CGWishartParams(float(rng.uniform(3, 8)), random_spd(rng, g.p))
    S = random_spd(rng, g.p) * 10
    try:
        f = complete(random_free_values(rng, g), g)
    except CompletionInfeasible:
        pytest.skip("infeasible draw")
    K = reconstruct_K(f)
    lhs = log_unnorm_density_phi(f, g, params, S, 10) + len(g.vertex_classes) * math.log(2)
    rhs = log_unnorm_density_K(K, params, S, 10) + log_jacobian(f.phi, g)
    assert abs(lhs - rhs) < 1e-10


@pytest.mark.parametrize("seed", range(6))
def test_jacobian_by_finite_differences(seed):
    rng = np.random.default_rng(100 + seed)
    g = random_graph(rng, int(rng.integers(2, 5)))
    free = free_elements(g)
    reps = list(free.representative)
    order = free.ordered
    try:
        base = random_free_values(rng, g)
        complete(base, g)
    except CompletionInfeasible:
        pytest.skip("infeasible draw")

    def kfree(x):
        f = complete(dict(zip(order, x)), g)
        K = reconstruct_K(f)
        return np.array([K[i - 1, j - 1] for i, j in reps])

    x0 = np.array([base[e] for e in order])
    h = 1e-6
    J = np.empty((len(x0), len(x0)))
    for k in range(len(x0)):
        e = np.zeros_like(x0)
        e[k] = h
        J[:, k] = (kfree(x0 + e) - kfree(x0 - e)) / (2 * h)
    _, logdet = np.linalg.slogdet(J)
    phi = complete(base, g).phi
    assert logdet == pytest.approx(log_jacobian(phi, g), abs=1e-6)


def _batch_se(x, nb=40):
    b = np.array_split(np.asarray(x), nb)
    m = np.array([c.mean(axis=0) for c in b])
    return m.std(axis=0, ddof=1) / math.sqrt(nb)


def test_sampler_gamma_moments():
    g = ColoredGraph.empty(1)
    params = CGWishartParams(5.0, np.array([[2.0]]))
    rng = np.random.default_rng(3)
    f = initial_factor(g)
    ks = []
    for _ in range(40_000):
        f, _ = sample(g, params, 1, 0.5, f, rng)
        ks.append(f.phi[0, 0] ** 2)
    ks = np.array(ks[2000:])
    dist = stats.gamma(2.5, scale=1.0)  # shape delta/2, rate D/2
    assert abs(ks.mean() - dist.mean()) < 3 * _batch_se(ks)
    assert abs(ks.var() - dist.var()) < 3 * _batch_se((ks - ks.mean()) ** 2)


def test_sampler_wishart_moments():
    g = ColoredGraph.complete(2)
    D = np.array([[1.0, 0.3], [0.3, 2.0]])
    params = CGWishartParams(4.0, D)
    rng = np.random.default_rng(5)
    f = initial_factor(g)
    Ks = []
    for _ in range(40_000):
        f, _ = sample(g, params, 1, 0.5, f, rng)
        K = reconstruct_K(f)
        Ks.append([K[0, 0], K[0, 1], K[1, 1]])
    Ks = np.array(Ks[2000:])
    # K ~ Wishart(delta + p - 1, D^{-1})
    mean = (params.delta + 1) * np.linalg.inv(D)
    want = np.array([mean[0, 0], mean[0, 1], mean[1, 1]])
    se = _batch_se(Ks)
    assert np.all(np.abs(Ks.mean(axis=0) - want) < 3 * se)


def test_sampler_respects_colors(rng):
    g = three_vertex("a")
    params = CGWishartParams.identity(3)
    f = initial_factor(g)
    for _ in range(50):
        f, _ = sample(g, params, 1, 0.5, f, rng)
        K = reconstruct_K(f)
        assert abs(K[0, 2] - K[1, 2]) < 1e-10
    with pytest.raises(ValueError):
        sample(three_vertex("b"), params, 1, 0.5, f, rng)


def test_params_validation():
    with pytest.raises(ValueError):
        CGWishartParams(0.0, np.eye(2))
    with pytest.raises(ValueError):
        CGWishartParams(3.0, -np.eye(2))
    post = CGWishartParams.identity(2).posterior(np.eye(2), 5)
    assert post.delta == 8.0 and np.allclose(post.D, 2 * np.eye(2))


@pytest.mark.parametrize("alpha, kappa, s", [(0.5, 0.3, 2.5), (3.5, 0.9, 160.0), (500.0, 0.01, 6000.0),
                                             (3700.0, 0.3, 6000.0)])
def test_star_integral_against_mpmath(alpha, kappa, s):
    mpmath = pytest.importorskip("mpmath")
    from cggm.wishart import _log_alg_power_integral

    mpmath.mp.dps = 30
    f = lambda t: mpmath.exp(alpha * mpmath.log(1 - t**2) - s * mpmath.log(1 + kappa * t))  # noqa: E731
    pts = sorted({-1.0, *[-1 + 10.0**e for e in range(-7, 1)], 0.5, 1.0})
    ref = float(mpmath.log(mpmath.quad(f, pts)))
    assert _log_alg_power_integral(alpha, kappa, s) == pytest.approx(ref, rel=1e-10, abs=1e-10)
