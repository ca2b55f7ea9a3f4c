"""Named precision matrices, data generation and the replicate harness."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .graph import ColoredGraph, three_vertex, star
from .linalg import Dataset, NotPositiveDefinite, is_positive_definite, mvn_sample
from .metrics import RecoveryReport, format_matrix, inclusion_probabilities, recovery_report
from .search import SearchConfig, select_model

log = logging.getLogger(__name__)


def _m(rows) -> np.ndarray:
    return np.array(rows, dtype=float)


# Bayes-factor experiments: (K, g1, g2); the reported factor is p(g2|X)/p(g1|X)
BF_PAIRS: dict[str, tuple[str, str, list[np.ndarray]]] = {
    "pair-ec": ("e", "c", [
        _m([[1, .4, .2], [.4, 1, 0], [.2, 0, 1]]),
        _m([[1, .4, .22], [.4, 1, 0], [.22, 0, 1]]),
        _m([[1, .4, 0], [.4, 1, 0], [0, 0, 1]]),
        _m([[1, .4, .1], [.4, 1, 0], [.1, 0, 1]]),
    ]),
    "pair-ab": ("a", "b", [
        _m([[1, .4, .2], [.4, 1, 0], [.2, 0, 1]]),
        _m([[1, .4, .38], [.4, 1, 0], [.38, 0, 1]]),
        _m([[1, .4, 0], [.4, 1, 0], [0, 0, 1]]),
        _m([[1, .4, .1], [.4, 1, 0], [.1, 0, 1]]),
    ]),
    "pair-cd": ("c", "d", [
        _m([[1, .4, .2], [.4, 1, 0], [.2, 0, 1]]),
        _m([[1, .4, .2], [.4, 1.35, 0], [.2, 0, 1]]),
        _m([[1, .4, .2], [.4, 1.2, 0], [.2, 0, 1]]),
        _m([[1, .4, .2], [.4, 1, 0], [.2, 0, 1.1]]),
    ]),
}

# reference exact factors, used only for the sign pattern
BF_REFERENCE_RN = {
    "pair-ec": [2.181, 3.017, 0.234, 1.469],
    "pair-ab": [4.349, 5.511, 0.152, 0.229],
    "pair-cd": [0.109, 1.988, 0.480, 0.388],
}

STAR_HUB_DIAGONALS = (1.0, 1.2, 1.3, 1.4)
STAR_RN_REFERENCE = (0.004, 0.019, 0.063, 0.230)

# model-selection generators
SELECTION_K: dict[str, np.ndarray] = {
    "sel:1": _m([[1, .4, .4], [.4, 1, 0], [.4, 0, 1]]),
    "sel:2": _m([[1, .5, .5], [.5, 2, 0], [.5, 0, 1]]),
    "sel:3": _m([[1, .4, 0], [.4, .5, .4], [0, .4, .5]]),
    "sel:4": _m([[1, .4, .4], [.4, 1, .4], [.4, .4, 1]]),
    "sel:5": _m([[1.5, 1, 1], [1, 1, 0], [1, 0, 3]]),
    # the (1,2) entry is taken as 0: with 0.5 the matrix is indefinite
    "sel:6": _m([[1, 0, 1.5], [0, .5, 0], [1.5, 0, 3]]),
    "sel:7": _m([[.5, 0, 0], [0, 2, 0], [0, 0, .5]]),
    "sel:8": _m([[.5, 0, 0], [0, .5, 0], [0, 0, .5]]),
    "sel:9": _m([[1.5, .6, 0], [.6, 2, 1.4], [0, 1.4, 1.5]]),
}


def bf_pair(name: str) -> tuple[ColoredGraph, ColoredGraph]:
    g1, g2, _ = BF_PAIRS[name]
    return three_vertex(g1), three_vertex(g2)


def star_precision(p: int, hub: float = 1.0, spoke: float = 0.3, leaf: float = 1.0) -> np.ndarray:
    """Star with hub ``p``: leaves on the diagonal, ``spoke`` to the hub."""
    K = np.eye(p) * leaf
    K[-1, -1] = hub
    K[:-1, -1] = K[-1, :-1] = spoke
    return K


def star_pair(p: int) -> tuple[ColoredGraph, ColoredGraph]:
    """``(g1, g2)`` with the one-vertex-class star first."""
    return star(p, hub_colored=False), star(p, hub_colored=True)


def graph_from_precision(K: np.ndarray, tol: float = 1e-12) -> ColoredGraph:
    """Colored graph implied by the zeros and ties of ``K``."""
    K = np.asarray(K, dtype=float)
    p = K.shape[0]

    def group(items, value):
        blocks: list[list] = []
        vals: list[float] = []
        for it in items:
            x = value(it)
            for b, v in zip(blocks, vals):
                if abs(x - v) <= tol:
                    b.append(it)
                    break
            else:
                blocks.append([it])
                vals.append(x)
        return blocks

    vcs = group(range(1, p + 1), lambda v: K[v - 1, v - 1])
    edges = [(i, j) for i in range(1, p + 1) for j in range(i + 1, p + 1) if abs(K[i - 1, j - 1]) > tol]
    ecs = group(edges, lambda e: K[e[0] - 1, e[1] - 1])
    return ColoredGraph(p, vcs, ecs)


def named_precision(spec: str) -> np.ndarray:
    """Resolve ``sel:1`` style names and ``star:P[:HUB]``."""
    if spec in SELECTION_K:
        return SELECTION_K[spec].copy()
    if spec.startswith("star:"):
        parts = spec.split(":")
        p = int(parts[1])
        hub = float(parts[2]) if len(parts) > 2 else 1.0
        return star_precision(p, hub)
    for name, (_, _, Ks) in BF_PAIRS.items():
        if spec.startswith(name + ":"):
            return Ks[int(spec.split(":")[1]) - 1].copy()
    raise KeyError(f"unknown precision spec {spec!r}")


def generate(K: np.ndarray, n: int, seed: int | np.random.Generator) -> Dataset:
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1] or not np.allclose(K, K.T):
        raise ValueError("precision matrix must be symmetric and square")
    if not is_positive_definite(K):
        raise NotPositiveDefinite("precision matrix is not positive definite")
    return mvn_sample(K, n, seed)


def data_rng(seed: int) -> np.random.Generator:
    """Stream for the data of run ``seed``; the search uses its own stream."""
    return np.random.default_rng([seed, 0])


# ---------------------------------------------------------------------------
# replicate harness
# ---------------------------------------------------------------------------


@dataclass
class RunResult:
    index: int
    seed: int
    graph: ColoredGraph | None
    seconds: float
    error: str | None = None
    report: RecoveryReport | None = None


@dataclass
class ReplicateSummary:
    true_graph: ColoredGraph
    runs: list[RunResult] = field(default_factory=list)

    @property
    def ok_runs(self) -> list[RunResult]:
        return [r for r in self.runs if r.graph is not None]

    @property
    def failed(self) -> list[RunResult]:
        return [r for r in self.runs if r.graph is None]

    @property
    def true_model_rate(self) -> float:
        ok = self.ok_runs
        return sum(r.graph == self.true_graph for r in ok) / len(ok) if ok else float("nan")

    def inclusion(self) -> np.ndarray:
        return inclusion_probabilities([r.graph for r in self.ok_runs])

    def edge_rates(self) -> tuple[float, float]:
        """Mean inclusion of true edges and of absent edges."""
        ip = self.inclusion()
        p = self.true_graph.p
        t, f = [], []
        for i in range(1, p + 1):
            for j in range(i + 1, p + 1):
                (t if (i, j) in self.true_graph.edges else f).append(ip[i - 1, j - 1])
        return (float(np.mean(t)) if t else float("nan"), float(np.mean(f)) if f else float("nan"))

    def metric_table(self) -> dict[str, tuple[float, float]]:
        reps = [r.report for r in self.ok_runs]
        cols = {
            "d0": [r.d0 for r in reps],
            "d_V": [float(np.mean(r.d_vertex)) for r in reps],
            "d_E": [float(np.mean(r.d_edge)) if r.d_edge else 1.0 for r in reps],
            "Acc_all": [r.acc_all for r in reps],
        }
        return {k: (float(np.mean(v)), float(np.std(v, ddof=1)) if len(v) > 1 else 0.0) for k, v in cols.items()}

    def format(self) -> str:
        lines = [f"true graph: {self.true_graph}",
                 f"runs: {len(self.runs)} ({len(self.failed)} failed)"]
        for r in self.failed:
            lines.append(f"  run {r.index} (seed {r.seed}) failed: {r.error}")
        if self.ok_runs:
            lines.append(f"percentage: {self.true_model_rate:.3f}")
            lines.append("IP:")
            lines.append(format_matrix(self.inclusion()))
            for k, (m, s) in self.metric_table().items():
                lines.append(f"{k:<8} {m:.3f} ({s:.3f})")
            lines.append(f"timing: {np.mean([r.seconds for r in self.ok_runs]):.3f} s per dataset")
        return "\n".join(lines)


def run_one(K: np.ndarray, n: int, cfg: SearchConfig, seed: int, index: int,
            g_true: ColoredGraph) -> RunResult:
    t0 = time.perf_counter()
    try:
        data = generate(K, n, data_rng(seed))
        run_cfg = SearchConfig(**{**cfg.__dict__, "seed": seed, "threads": 1})
        g, _ = select_model(data, run_cfg)
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return RunResult(index, seed, None, time.perf_counter() - t0, f"{type(exc).__name__}: {exc}")
    return RunResult(index, seed, g, time.perf_counter() - t0, None, recovery_report(g_true, g))


def replicate(K: np.ndarray, n: int, reps: int, cfg: SearchConfig | None = None,
              seed: int = 0, threads: int = 1, g_true: ColoredGraph | None = None) -> ReplicateSummary:
    """Generate ``reps`` datasets and run the search on each.

    Run ``r`` uses seed ``seed + r`` for both its data and its search
    (through separate streams).  Failed runs are kept in the summary.
    """
    cfg = cfg or SearchConfig()
    K = np.asarray(K, dtype=float)
    g_true = g_true or graph_from_precision(K)
    jobs = [(seed + r, r) for r in range(reps)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            runs = list(ex.map(lambda a: run_one(K, n, cfg, a[0], a[1], g_true), jobs))
    else:
        runs = [run_one(K, n, cfg, s, r, g_true) for s, r in jobs]
    return ReplicateSummary(g_true, runs)
