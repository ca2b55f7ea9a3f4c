"""Bayes factors between two neighboring colored graphs.

A two-state chain alternates between within-graph Metropolis-Hastings
sweeps on ``Phi`` and one attempted jump to the other graph per
iteration.  The Bayes factor is the ratio of post-burn-in visit counts.

``rj`` needs the prior normalizing constants of both graphs.  ``drj``
carries an auxiliary prior-distributed factor ``Omega`` on the graph the
chain is not in and makes the mirrored jump on it, so the constants cancel.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import kernels
from .graph import ColoredGraph, neighbor_pair
from .linalg import CholeskyFactor, complete_array, layout
from .wishart import (
    CGWishartParams,
    draw_uniforms,
    initial_factor,
    log_norm_const,
    log_unnorm_density_phi,
)

METHODS = {"rj": kernels.RJ, "drj": kernels.DRJ}
_CHUNK = 2000
_WARMUP = 20


class DegenerateCounts(RuntimeWarning):
    pass


@dataclass
class BFEstimate:
    """Estimate of ``p(g2 | X) / p(g1 | X)``.

    ``counts`` are total post-burn-in visits ``(g1, g2)``.  When one graph
    is never visited ``value`` is 0 or ``inf``, ``std_error`` is NaN and
    ``degenerate`` is set.
    """

    value: float
    std_error: float
    counts: tuple[int, int]
    degenerate: bool = False
    replicate_values: list[float] = field(default_factory=list)
    acceptance: tuple[float, float] = (math.nan, math.nan)

    @property
    def log_value(self) -> float:
        if self.value == 0:
            return -math.inf
        return math.log(self.value)

    def favors_g2(self) -> bool:
        return self.value > 1.0


def _ratio(num: int, den: int) -> float:
    if den == 0:
        return math.inf if num > 0 else math.nan
    return num / den


@dataclass
class _Pair:
    small: ColoredGraph
    large: ColoredGraph
    a: int
    b: int
    g2_is_large: bool


def _setup(g1: ColoredGraph, g2: ColoredGraph) -> _Pair:
    small, large, (i, j) = neighbor_pair(g1, g2)
    return _Pair(small, large, i - 1, j - 1, large == g2)


def rj_constant(small: ColoredGraph, large: ColoredGraph, params: CGWishartParams) -> float:
    """Log of ``(2^|V_L| / I_L) / (2^|V_S| / I_S)`` for the prior constants."""
    log2 = math.log(2.0)
    return (
        len(large.vertex_classes) * log2 - log_norm_const(large, params)
        - len(small.vertex_classes) * log2 + log_norm_const(small, params)
    )


def _run_chain(pair: _Pair, method: int, params: CGWishartParams, S: np.ndarray, n: int,
               iters: int, burnin: int, sweeps: int, sigma: float, const_adj: float,
               seed: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    ls, ll = layout(pair.small), layout(pair.large)
    M_post = np.ascontiguousarray(params.D + S)
    M_prior = np.ascontiguousarray(params.D)
    ep_s, ep_l = ls.exponents(params.delta, n), ll.exponents(params.delta, n)
    pr_s, pr_l = ls.exponents(params.delta), ll.exponents(params.delta)

    post_mean = np.linalg.inv(M_post) * (params.delta + n)
    phi = np.ascontiguousarray(initial_factor(pair.small, post_mean).phi)
    omega = np.ascontiguousarray(initial_factor(pair.large, np.linalg.inv(params.D) * params.delta).phi)
    # short warm-up so neither chain starts at an atypical point
    for f, lay, ep, M in ((phi, ls, ep_s, M_post), (omega, ll, pr_l, M_prior)):
        slots = _WARMUP * lay.nfree
        kernels.mh_sweeps(f, *lay.arrays(), ep, M, sigma, _WARMUP,
                          rng.standard_normal(slots), draw_uniforms(rng, 2 * slots))

    state = np.zeros(1, dtype=np.intc)
    counts = np.zeros(2, dtype=np.int64)
    acc = np.zeros(4, dtype=np.int64)
    block = 2 * sweeps * ll.nfree + 1
    done = 0
    while done < iters:
        m = min(_CHUNK, iters - done)
        z = rng.standard_normal(m * block)
        u = draw_uniforms(rng, 2 * m * block)
        kernels.pair_chain(method, ls.arrays(), ll.arrays(), pair.a, pair.b,
                           ep_s, ep_l, pr_s, pr_l, M_post, M_prior, float(const_adj),
                           float(sigma), int(sweeps), phi, omega, state, counts, acc,
                           max(0, burnin - done), z, u, m)
        done += m
    return counts, acc


def estimate_bf(
    g1: ColoredGraph,
    g2: ColoredGraph,
    S: np.ndarray,
    n: int,
    params: CGWishartParams | None = None,
    method: str = "drj",
    iters: int = 10_000,
    burnin: int = 1_000,
    sweeps: int = 1,
    sigma: float = 0.5,
    replicates: int = 5,
    seed: int = 0,
    threads: int = 1,
) -> BFEstimate:
    """Estimate ``p(g2 | X) / p(g1 | X)`` under equal graph priors.

    Parameters
    ----------
    g1, g2 : ColoredGraph
        Neighboring graphs (one frees exactly one element of the other).
    S : ndarray
        Scatter matrix ``X.T @ X``.
    n : int
        Number of observations.
    params : CGWishartParams, optional
        Prior; defaults to ``delta=3, D=I``.
    method : {"rj", "drj"}
    iters, burnin : int
        Iterations per replicate and how many of them to discard.
    sweeps : int
        Within-graph sweeps per iteration.
    sigma : float
        Proposal standard deviation.
    replicates : int
        Independent chains; replicate ``r`` is seeded with ``seed + r``.
    threads : int
        Chains run concurrently when greater than one.
    """
    if method not in METHODS:
        raise ValueError(f"method must be one of {sorted(METHODS)}, got {method!r}")
    if not (iters > burnin >= 0):
        raise ValueError("need iters > burnin >= 0")
    if replicates < 1 or sweeps < 1 or not sigma > 0:
        raise ValueError("replicates and sweeps must be positive and sigma > 0")
    params = params or CGWishartParams.identity(g1.p)
    S = np.asarray(S, dtype=float)
    if S.shape != (g1.p, g1.p):
        raise ValueError(f"S is {S.shape}, graphs have p={g1.p}")
    pair = _setup(g1, g2)
    code = METHODS[method]
    const_adj = rj_constant(pair.small, pair.large, params) if code == kernels.RJ else 0.0

    def job(r):
        return _run_chain(pair, code, params, S, n, iters, burnin, sweeps, sigma, const_adj, seed + r)

    if threads > 1 and replicates > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(job, range(replicates)))
    else:
        results = [job(r) for r in range(replicates)]

    def orient(c):
        # counts are (small, large); report (g1, g2)
        return (int(c[0]), int(c[1])) if pair.g2_is_large else (int(c[1]), int(c[0]))

    per = [orient(c) for c, _ in results]
    tot = (sum(c[0] for c in per), sum(c[1] for c in per))
    vals = [_ratio(c2, c1) for c1, c2 in per]
    acc = np.sum([a for _, a in results], axis=0)
    acceptance = (_ratio(acc[1], acc[0]), _ratio(acc[3], acc[2]))
    if tot[0] == 0 or tot[1] == 0:
        value = math.inf if tot[0] == 0 else 0.0
        return BFEstimate(value, math.nan, tot, True, vals, acceptance)
    value = tot[1] / tot[0]
    if replicates > 1 and all(np.isfinite(vals)):
        se = float(np.std(vals, ddof=1) / math.sqrt(replicates))
    else:
        se = math.nan
    return BFEstimate(value, se, tot, False, vals, acceptance)


# ---------------------------------------------------------------------------
# reference evaluation of single-move acceptance ratios
# ---------------------------------------------------------------------------


def log_proposal_density(x: float, mu: float, sigma: float, diagonal: bool) -> float:
    """Normal density, or the zero-truncated normal on a diagonal."""
    if diagonal:
        return float(stats.truncnorm.logpdf(x, -mu / sigma, np.inf, loc=mu, scale=sigma))
    return float(stats.norm.logpdf(x, loc=mu, scale=sigma))


def _log_post(phi, g, params, S, n):
    return log_unnorm_density_phi(CholeskyFactor(phi, g), g, params, S, n)


def _log_prior(phi, g, params):
    return log_unnorm_density_phi(CholeskyFactor(phi, g), g, params)


def forward_log_ratio(
    g1: ColoredGraph,
    g2: ColoredGraph,
    phi: np.ndarray,
    x: float,
    params: CGWishartParams,
    S: np.ndarray,
    n: int,
    sigma: float,
    method: str = "rj",
    omega: np.ndarray | None = None,
) -> tuple[float, np.ndarray, np.ndarray | None]:
    """Log acceptance ratio of the jump from the smaller graph to the larger.

    ``phi`` is the current factor on the smaller graph, ``x`` the proposed
    value of the freed element and, for ``drj``, ``omega`` the auxiliary
    factor on the larger graph.  Returns the ratio and the proposed factors.
    Evaluated from full densities, independently of the chain kernels.
    """
    small, large, (i, j) = neighbor_pair(g1, g2)
    a, b = i - 1, j - 1
    diag = a == b
    new = phi.copy()
    new[a, b] = x
    if not complete_array(new, large, a * g1.p + b + 1):
        return -math.inf, new, None
    lr = _log_post(new, large, params, S, n) - _log_post(phi, small, params, S, n)
    lr -= log_proposal_density(x, phi[a, b], sigma, diag)
    if method == "rj":
        lr += rj_constant(small, large, params)
        return lr, new, None
    new_om = omega.copy()
    if not complete_array(new_om, small, a * g1.p + b):
        return -math.inf, new, None
    lr += _log_prior(new_om, small, params) - _log_prior(omega, large, params)
    lr += log_proposal_density(omega[a, b], new_om[a, b], sigma, diag)
    return lr, new, new_om


def reverse_log_ratio(
    g1: ColoredGraph,
    g2: ColoredGraph,
    phi: np.ndarray,
    params: CGWishartParams,
    S: np.ndarray,
    n: int,
    sigma: float,
    method: str = "rj",
    omega: np.ndarray | None = None,
    x: float | None = None,
) -> tuple[float, np.ndarray, np.ndarray | None]:
    """Log acceptance ratio of the jump from the larger graph to the smaller.

    ``phi`` is on the larger graph.  For ``drj``, ``omega`` is on the
    smaller graph and ``x`` is the proposed auxiliary value of the freed
    element.
    """
    small, large, (i, j) = neighbor_pair(g1, g2)
    a, b = i - 1, j - 1
    diag = a == b
    new = phi.copy()
    if not complete_array(new, small, a * g1.p + b):
        return -math.inf, new, None
    lr = _log_post(new, small, params, S, n) - _log_post(phi, large, params, S, n)
    lr += log_proposal_density(phi[a, b], new[a, b], sigma, diag)
    if method == "rj":
        lr -= rj_constant(small, large, params)
        return lr, new, None
    new_om = omega.copy()
    new_om[a, b] = x
    if not complete_array(new_om, large, a * g1.p + b + 1):
        return -math.inf, new, None
    lr += _log_prior(new_om, large, params) - _log_prior(omega, small, params)
    lr -= log_proposal_density(x, omega[a, b], sigma, diag)
    return lr, new, new_om
