"""Cholesky parameterization of precision matrices in ``P_G``.

A precision matrix ``K`` is written ``K = Phi.T @ Phi`` with ``Phi`` upper
triangular.  Only the entries of ``Phi`` at the free positions of the graph
are independent; :func:`complete` fills in the rest so that ``K`` has zeros
off the edge set and equal entries within every color class.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Mapping

import numpy as np

from . import kernels
from .graph import ColoredGraph, FreeElementMap, free_elements

EPS = kernels.EPS


class NonPositiveDiagonal(ValueError):
    pass


class CompletionInfeasible(ValueError):
    pass


class NotPositiveDefinite(ValueError):
    pass


@dataclass(frozen=True)
class GraphLayout:
    """Array encoding of a colored graph for the kernels (0-indexed).

    ``code[i, j]`` is 0 for a free position, 1 for a non-edge and 2 for a
    non-free member of a class whose representative is
    ``(rep_i[i, j], rep_j[i, j])``.
    """

    p: int
    code: np.ndarray
    rep_i: np.ndarray
    rep_j: np.ndarray
    free_i: np.ndarray
    free_j: np.ndarray
    v: np.ndarray
    n_vertex_classes: int

    @property
    def nfree(self) -> int:
        return len(self.free_i)

    def arrays(self) -> tuple:
        return (self.code, self.rep_i, self.rep_j, self.free_i, self.free_j)

    def exponents(self, delta: float, n: float = 0.0) -> np.ndarray:
        """Powers of ``Phi_ii`` in the Cholesky-space density.

        ``n + delta + p - i - 1 - v_i`` for 1-indexed row ``i``.
        """
        i = np.arange(1, self.p + 1)
        return (n + delta + self.p - i - 1 - self.v).astype(float)


@lru_cache(maxsize=4096)
def layout(g: ColoredGraph) -> GraphLayout:
    p = g.p
    fm = free_elements(g)
    code = np.ones((p, p), dtype=np.int8)
    rep_i = np.zeros((p, p), dtype=np.intc)
    rep_j = np.zeros((p, p), dtype=np.intc)
    for block in g.classes():
        ri, rj = min(block)
        for i, j in block:
            code[i - 1, j - 1] = 0 if (i, j) == (ri, rj) else 2
            rep_i[i - 1, j - 1] = ri - 1
            rep_j[i - 1, j - 1] = rj - 1
    ordered = fm.ordered
    free_i = np.array([i - 1 for i, _ in ordered], dtype=np.intc)
    free_j = np.array([j - 1 for _, j in ordered], dtype=np.intc)
    for arr in (code, rep_i, rep_j, free_i, free_j):
        arr.setflags(write=False)
    v = np.array(fm.v_exponents, dtype=float)
    return GraphLayout(p, code, rep_i, rep_j, free_i, free_j, v, len(g.vertex_classes))


@dataclass
class CholeskyFactor:
    """Upper-triangular ``Phi`` consistent with a colored graph."""

    phi: np.ndarray
    graph: ColoredGraph

    @property
    def p(self) -> int:
        return self.graph.p

    @property
    def free_map(self) -> FreeElementMap:
        return free_elements(self.graph)

    def free_values(self) -> dict[tuple[int, int], float]:
        return {(i, j): float(self.phi[i - 1, j - 1]) for i, j in self.free_map.ordered}

    def copy(self) -> "CholeskyFactor":
        return CholeskyFactor(self.phi.copy(), self.graph)


def complete_array(phi: np.ndarray, g: ColoredGraph, start: int = 0) -> bool:
    """Recompute the non-free entries of ``phi`` in place.

    Only positions at or after flat index ``start`` (row-major, which is
    the lexicographic order) are touched.  Returns False when a non-free
    diagonal would need a square root of something ``<= EPS``.
    """
    lay = layout(g)
    return kernels.complete(phi, lay.code, lay.rep_i, lay.rep_j, start) == 0


def complete(free_values: Mapping[tuple[int, int], float], g: ColoredGraph) -> CholeskyFactor:
    """Build the Cholesky factor determined by its free entries.

    Parameters
    ----------
    free_values : mapping
        Value of ``Phi_ij`` for every free position ``(i, j)`` (1-indexed).
    g : ColoredGraph

    Raises
    ------
    NonPositiveDiagonal
        A free diagonal value is ``<= EPS``.
    CompletionInfeasible
        A non-free diagonal has no real positive value.
    """
    fm = free_elements(g)
    keys = {(int(i), int(j)) for i, j in free_values}
    if keys != set(fm.free):
        missing = sorted(fm.free - keys)
        extra = sorted(keys - fm.free)
        raise KeyError(f"free values must cover exactly the free positions; missing {missing}, extra {extra}")
    phi = np.zeros((g.p, g.p))
    for (i, j), val in free_values.items():
        if i == j and not val > EPS:
            raise NonPositiveDiagonal(f"Phi[{i},{i}] = {val} is not positive")
        phi[i - 1, j - 1] = val
    if not complete_array(phi, g):
        raise CompletionInfeasible("a non-free diagonal has a non-positive radicand")
    return CholeskyFactor(phi, g)


def reconstruct_K(f: CholeskyFactor | np.ndarray) -> np.ndarray:
    phi = f.phi if isinstance(f, CholeskyFactor) else f
    K = phi.T @ phi
    return 0.5 * (K + K.T)


def extract_free(K: np.ndarray, g: ColoredGraph) -> dict[tuple[int, int], float]:
    """Free Cholesky entries of a matrix already in ``P_G``."""
    phi = upper_cholesky(K)
    return {(i, j): float(phi[i - 1, j - 1]) for i, j in free_elements(g).ordered}


def upper_cholesky(K: np.ndarray) -> np.ndarray:
    """Upper-triangular ``Phi`` with ``K = Phi.T @ Phi``."""
    try:
        L = np.linalg.cholesky(K)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite("matrix is not positive definite") from None
    return L.T.copy()


def constraint_residual(K: np.ndarray, g: ColoredGraph) -> tuple[float, float]:
    """Largest off-pattern entry and largest within-class spread of ``K``."""
    p = g.p
    off = 0.0
    for i in range(1, p + 1):
        for j in range(i + 1, p + 1):
            if (i, j) not in g.edges:
                off = max(off, abs(K[i - 1, j - 1]))
    spread = 0.0
    for block in g.classes():
        vals = [K[i - 1, j - 1] for i, j in block]
        spread = max(spread, max(vals) - min(vals))
    return off, spread


def project_to_graph(K: np.ndarray, g: ColoredGraph) -> np.ndarray:
    """Average ``K`` within classes and zero its non-edges."""
    P = np.zeros_like(K, dtype=float)
    for block in g.classes():
        val = np.mean([K[i - 1, j - 1] for i, j in block])
        for i, j in block:
            P[i - 1, j - 1] = P[j - 1, i - 1] = val
    return P


def is_positive_definite(K: np.ndarray) -> bool:
    try:
        np.linalg.cholesky(K)
    except np.linalg.LinAlgError:
        return False
    return True


# ---------------------------------------------------------------------------
# data
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Dataset:
    """``n`` observations of a ``p``-vector with scatter ``S = X.T @ X``."""

    X: np.ndarray

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def S(self) -> np.ndarray:
        S = self.X.T @ self.X
        return 0.5 * (S + S.T)

    def to_csv(self, path=None, header: bool = True) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if header:
            w.writerow([f"x{j}" for j in range(1, self.p + 1)])
        for row in self.X:
            w.writerow([repr(float(v)) for v in row])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, path) -> "Dataset":
        return cls.from_csv_text(Path(path).read_text())

    @classmethod
    def from_csv_text(cls, text: str) -> "Dataset":
        rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
        if not rows:
            raise ValueError("empty CSV")
        header = None
        try:
            [float(c) for c in rows[0]]
        except ValueError:
            header, rows = rows[0], rows[1:]
        p = len(header) if header is not None else len(rows[0])
        X = np.empty((len(rows), p))
        for k, r in enumerate(rows):
            if len(r) != p:
                raise ValueError(f"row {k + 1} has {len(r)} fields, expected {p}")
            X[k] = [float(c) for c in r]
        return cls(X)


def mvn_sample(K: np.ndarray, n: int, seed: int | np.random.Generator) -> Dataset:
    """Draw ``n`` rows from ``N(0, K^{-1})``."""
    K = np.asarray(K, dtype=float)
    phi = upper_cholesky(K)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    Z = rng.standard_normal((n, K.shape[0]))
    # rows x = Phi^{-1} z have covariance (Phi.T Phi)^{-1}
    X = np.linalg.solve(phi, Z.T).T if n else Z
    return Dataset(X)
