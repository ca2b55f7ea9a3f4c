"""Greedy model search over colored graphs.

Starting from the graph with no edges, each vertex in turn is regressed on
the others.  Significant coefficients nominate edges, which are added one
at a time when the estimated Bayes factor favors them, and each added edge
is then offered to the existing edge classes.  A final pass tries to merge
vertices into earlier vertex classes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np
from scipy import stats

from .bayes_factor import BFEstimate, estimate_bf
from .graph import ColoredGraph, GraphMove, add_edge, apply_move, merge_edge, merge_vertex
from .linalg import Dataset
from .wishart import CGWishartParams, log_rn

log = logging.getLogger(__name__)


class RankDeficient(ValueError):
    pass


@dataclass
class SearchConfig:
    alpha: float = 0.05
    delta: float = 3.0
    D: np.ndarray | None = None
    sigma: float = 0.5
    iters: int = 5_000
    burnin: int = 1_000
    sweeps: int = 1
    replicates: int = 1
    method: str = "drj"
    seed: int = 0
    threads: int = 1
    revisit_rejected: bool = True

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if not self.iters > self.burnin >= 0:
            raise ValueError("need iters > burnin >= 0")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    def params(self, p: int) -> CGWishartParams:
        return CGWishartParams(self.delta, np.eye(p) if self.D is None else self.D)


@dataclass
class RegressionScreen:
    response: int
    candidates: list[tuple[tuple[int, int], float]]


@dataclass
class TraceRecord:
    phase: str
    move: GraphMove
    bf: float
    accepted: bool
    degenerate: bool = False


@dataclass
class SearchTrace:
    p: int
    records: list[TraceRecord] = field(default_factory=list)

    def __iter__(self) -> Iterator[TraceRecord]:
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)

    def accepted(self) -> list[TraceRecord]:
        return [r for r in self.records if r.accepted]

    def replay(self) -> ColoredGraph:
        """Rebuild the selected graph from the accepted moves."""
        g = ColoredGraph.empty(self.p)
        for r in self.accepted():
            g = apply_move(g, r.move)
        return g

    def format(self) -> str:
        lines = []
        for r in self.records:
            flag = " (degenerate)" if r.degenerate else ""
            tgt = r.move.target if r.move.class_ref is None else f"{r.move.target} -> {r.move.class_ref}"
            lines.append(f"{r.phase:<12} {r.move.kind.value:<22} {tgt!s:<18} BF={r.bf:.3f} "
                         f"{'accept' if r.accepted else 'reject'}{flag}")
        return "\n".join(lines)


def screen_edges(data: Dataset, g: ColoredGraph, j: int, alpha: float) -> RegressionScreen:
    """Regress column ``j`` (1-indexed) on the others and list new edges.

    Ordinary least squares with an intercept; two-sided t-tests on
    ``n - p`` degrees of freedom.  Candidates with p-value below ``alpha``
    that are not already edges of ``g`` are returned, most significant
    first, ties broken by edge order.
    """
    X = np.asarray(data.X, dtype=float)
    n, p = X.shape
    if n <= p:
        raise RankDeficient(f"need more observations than variables (n={n}, p={p})")
    others = [k for k in range(p) if k != j - 1]
    A = np.column_stack([np.ones(n), X[:, others]])
    y = X[:, j - 1]
    beta, _, rank, _ = np.linalg.lstsq(A, y, rcond=1e-10)
    if rank < A.shape[1]:
        raise RankDeficient("design matrix is rank deficient")
    dof = n - p
    resid = y - A @ beta
    s2 = float(resid @ resid) / dof
    cov = s2 * np.linalg.inv(A.T @ A)
    se = np.sqrt(np.diag(cov))[1:]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = beta[1:] / se
    pvals = 2.0 * stats.t.sf(np.abs(t), dof)
    pvals = np.where(np.isnan(pvals), 1.0, pvals)
    cands = []
    for k, pv in zip(others, pvals):
        e = tuple(sorted((j, k + 1)))
        if pv < alpha and e not in g.edges:
            cands.append((e, float(pv)))
    cands.sort(key=lambda c: (c[1], c[0]))
    return RegressionScreen(j, cands)


class _Decider:
    """Shared state for one search run: data, config and seed stream."""

    def __init__(self, data: Dataset, cfg: SearchConfig, trace: SearchTrace):
        self.S = data.S
        self.n = data.n
        self.cfg = cfg
        self.params = cfg.params(data.p)
        self.trace = trace
        self._rng = np.random.default_rng([cfg.seed, 1])

    def bf(self, g: ColoredGraph, g_new: ColoredGraph) -> BFEstimate:
        c = self.cfg
        seed = int(self._rng.integers(0, 2**62))
        return estimate_bf(g, g_new, self.S, self.n, self.params, c.method, c.iters, c.burnin,
                           c.sweeps, c.sigma, c.replicates, seed, c.threads)

    def decide(self, phase: str, g: ColoredGraph, move: GraphMove) -> tuple[ColoredGraph, bool]:
        g_new = apply_move(g, move)
        est = self.bf(g, g_new)
        ok = est.value > 1.0
        self.trace.records.append(TraceRecord(phase, move, est.value, ok, est.degenerate))
        log.debug("%s %s BF=%.3f %s", phase, move, est.value, "accept" if ok else "reject")
        return (g_new, True) if ok else (g, False)


def try_add_edge(g: ColoredGraph, edge, dec: _Decider) -> tuple[ColoredGraph, bool]:
    """Add ``edge`` as a new class when its Bayes factor exceeds one."""
    return dec.decide("add-edge", g, add_edge(edge))


def try_color_edge(g: ColoredGraph, edge, dec: _Decider) -> ColoredGraph:
    """Offer a singleton edge class to each other edge class in turn.

    Classes are visited in lexicographic order of their representatives
    and the first merge with Bayes factor above one is kept.
    """
    edge = tuple(edge)
    reps = sorted(min(b) for b in g.edge_classes if edge not in b)
    for u in reps:
        g, ok = dec.decide("color-edge", g, merge_edge(edge, u))
        if ok:
            break
    return g


def color_vertices(g: ColoredGraph, dec: _Decider) -> ColoredGraph:
    """For ``k = 2..p`` try merging vertex ``k`` into earlier vertex classes."""
    for k in range(2, g.p + 1):
        if g.vertex_class_of(k) != (k,):
            continue
        reps = sorted(b[0] for b in g.vertex_classes if b[0] < k)
        for u in reps:
            g, ok = dec.decide("color-vertex", g, merge_vertex(k, u))
            if ok:
                break
    return g


def select_model(data: Dataset, cfg: SearchConfig | None = None) -> tuple[ColoredGraph, SearchTrace]:
    """Run the full greedy search and return the selected graph and trace."""
    cfg = cfg or SearchConfig()
    p = data.p
    if data.n <= p:
        raise RankDeficient(f"need more observations than variables (n={data.n}, p={p})")
    trace = SearchTrace(p)
    dec = _Decider(data, cfg, trace)
    g = ColoredGraph.empty(p)
    decided: set[tuple[int, int]] = set()
    for j in range(1, p + 1):
        screen = screen_edges(data, g, j, cfg.alpha)
        for e, _ in screen.candidates:
            # a rejected edge may come back when a later response flags it
            # again, unless revisiting is switched off
            if e in g.edges or (e in decided and not cfg.revisit_rejected):
                continue
            decided.add(e)
            g, ok = try_add_edge(g, e, dec)
            if ok:
                g = try_color_edge(g, e, dec)
    g = color_vertices(g, dec)
    return g, trace


def log_bf_exact(g_true: ColoredGraph, g_other: ColoredGraph, data: Dataset,
                 params: CGWishartParams | None = None) -> float:
    """``log p(g_true | X) - log p(g_other | X)`` from normalizing constants."""
    params = params or CGWishartParams.identity(data.p)
    return log_rn(g_true, g_other, params, data.S, data.n)


__all__ = [
    "RankDeficient",
    "SearchConfig",
    "RegressionScreen",
    "SearchTrace",
    "TraceRecord",
    "screen_edges",
    "try_add_edge",
    "try_color_edge",
    "color_vertices",
    "select_model",
    "log_bf_exact",
]
