"""Structure-recovery scores for a selected colored graph.

Two estimated entries count as equal when both are absent edges or both
belong to the same class of the estimated graph.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from .graph import ColoredGraph, DimensionMismatch


class EmptyRuns(ValueError):
    pass


def _check(g_true: ColoredGraph, g_hat: ColoredGraph) -> None:
    if g_true.p != g_hat.p:
        raise DimensionMismatch(f"true graph has p={g_true.p}, estimate has p={g_hat.p}")


def _edge_label(g: ColoredGraph) -> dict[tuple[int, int], int]:
    """Class index for every off-diagonal position; -1 for non-edges."""
    lab = {e: -1 for e in combinations(range(1, g.p + 1), 2)}
    for k, block in enumerate(g.edge_classes):
        for e in block:
            lab[e] = k
    return lab


def _vertex_label(g: ColoredGraph) -> dict[int, int]:
    return {v: k for k, block in enumerate(g.vertex_classes) for v in block}


def d0(g_true: ColoredGraph, g_hat: ColoredGraph) -> float:
    """Share of off-diagonal positions with the right zero/non-zero status."""
    _check(g_true, g_hat)
    pairs = list(combinations(range(1, g_true.p + 1), 2))
    if not pairs:
        return 1.0
    hits = sum((e in g_true.edges) == (e in g_hat.edges) for e in pairs)
    return hits / len(pairs)


def class_metrics(g_true: ColoredGraph, g_hat: ColoredGraph) -> tuple[list[float], list[float]]:
    """Scores for each true vertex class and each true edge class.

    For a true class, every (member, other position) pair is scored: a
    pair inside the class is correct when the estimate puts both in one
    class, a pair straddling it is correct when the estimate keeps them
    apart.  Pairs are ordered, so the denominators are
    ``|V|(p - 1)`` and ``|E|(p(p - 1)/2 - 1)``.
    """
    _check(g_true, g_hat)
    p = g_true.p
    vl = _vertex_label(g_hat)
    dv = []
    for block in g_true.vertex_classes:
        if p == 1:
            dv.append(1.0)
            continue
        members = set(block)
        hits = 0
        for j in block:
            for jp in range(1, p + 1):
                if jp == j:
                    continue
                same = vl[j] == vl[jp]
                hits += same if jp in members else not same
        dv.append(hits / (len(block) * (p - 1)))
    el = _edge_label(g_hat)
    positions = list(el)
    de = []
    for block in g_true.edge_classes:
        members = set(block)
        if len(positions) < 2:
            de.append(1.0)
            continue
        hits = 0
        for e in block:
            for f in positions:
                if f == e:
                    continue
                same = el[e] == el[f]
                hits += same if f in members else not same
        de.append(hits / (len(block) * (len(positions) - 1)))
    return dv, de


def acc_all(d_zero: float, d_vertex: Sequence[float], d_edge: Sequence[float]) -> float:
    """Mean of ``d0`` and all per-class scores."""
    return (d_zero + sum(d_vertex) + sum(d_edge)) / (1 + len(d_vertex) + len(d_edge))


@dataclass
class RecoveryReport:
    d0: float
    d_vertex: list[float]
    d_edge: list[float]

    @property
    def acc_all(self) -> float:
        return acc_all(self.d0, self.d_vertex, self.d_edge)

    def format(self) -> str:
        dv = " ".join(f"{x:.3f}" for x in self.d_vertex)
        de = " ".join(f"{x:.3f}" for x in self.d_edge)
        return f"d0 {self.d0:.3f}\nd_V {dv}\nd_E {de}\nAcc_all {self.acc_all:.3f}"


def recovery_report(g_true: ColoredGraph, g_hat: ColoredGraph) -> RecoveryReport:
    dv, de = class_metrics(g_true, g_hat)
    return RecoveryReport(d0(g_true, g_hat), dv, de)


def inclusion_probabilities(runs: Sequence[ColoredGraph]) -> np.ndarray:
    """Symmetric matrix of edge frequencies over ``runs`` (NaN diagonal)."""
    if not runs:
        raise EmptyRuns("no runs to aggregate")
    p = runs[0].p
    out = np.zeros((p, p))
    for g in runs:
        if g.p != p:
            raise DimensionMismatch("runs have different numbers of vertices")
        for i, j in g.edges:
            out[i - 1, j - 1] += 1
            out[j - 1, i - 1] += 1
    out /= len(runs)
    np.fill_diagonal(out, np.nan)
    return out


def format_matrix(M: np.ndarray) -> str:
    rows = []
    for i, row in enumerate(M):
        cells = ["*" if i == j else ("" if j < i else f"{x:.2f}") for j, x in enumerate(row)]
        rows.append(" ".join(f"{c:>5}" for c in cells))
    return "\n".join(rows)
