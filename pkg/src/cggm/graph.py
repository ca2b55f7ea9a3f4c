"""Colored graphs: validation, free elements, neighbor moves and competitor
classification.

Vertices are 1-indexed and every position of the precision matrix is an
ordered pair ``(i, j)`` with ``i <= j``; diagonal pairs ``(i, i)`` stand for
vertices.  Color classes are stored as sorted tuples and the classes
themselves are sorted by their lexicographic minimum, so two graphs with the
same structure compare equal regardless of how they were written down.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

Pair = tuple[int, int]


class GraphValidationError(ValueError):
    """Base class for malformed colored graphs."""


class OverlappingClasses(GraphValidationError):
    pass


class UncoveredElement(GraphValidationError):
    pass


class SelfLoop(GraphValidationError):
    pass


class InapplicableMove(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


class NotNeighbors(ValueError):
    """The two graphs do not differ by exactly one free element."""


def _pair(e: Sequence[int]) -> Pair:
    i, j = int(e[0]), int(e[1])
    return (i, j) if i <= j else (j, i)


@dataclass(frozen=True)
class ColoredGraph:
    """Colored undirected graph on vertices ``1..p``.

    Parameters
    ----------
    p : int
        Number of vertices.
    vertex_classes : iterable of iterables of int
        Partition of ``{1, ..., p}``.
    edge_classes : iterable of iterables of pairs
        Partition of the edge set.  The edge set is the union of the classes.
    edges : iterable of pairs, optional
        Explicit edge set.  When given, ``edge_classes`` must partition it
        exactly.
    """

    p: int
    vertex_classes: tuple[tuple[int, ...], ...]
    edge_classes: tuple[tuple[Pair, ...], ...] = ()
    edges: frozenset[Pair] = field(default=None, compare=False, repr=False)  # type: ignore[assignment]

    def __post_init__(self):
        vc = []
        for block in self.vertex_classes:
            vc.append(tuple(sorted(int(v) for v in block)))
        ec = []
        for block in self.edge_classes:
            pairs = []
            for e in block:
                if int(e[0]) == int(e[1]):
                    raise SelfLoop(f"self-loop at vertex {int(e[0])}")
                pairs.append(_pair(e))
            ec.append(tuple(sorted(pairs)))
        vc.sort(key=lambda b: b[0] if b else 0)
        ec.sort(key=lambda b: b[0] if b else (0, 0))
        object.__setattr__(self, "p", int(self.p))
        object.__setattr__(self, "vertex_classes", tuple(vc))
        object.__setattr__(self, "edge_classes", tuple(ec))
        implied = frozenset(e for block in ec for e in block)
        if self.edges is None:
            object.__setattr__(self, "edges", implied)
        else:
            given = []
            for e in self.edges:
                if int(e[0]) == int(e[1]):
                    raise SelfLoop(f"self-loop at vertex {int(e[0])}")
                given.append(_pair(e))
            object.__setattr__(self, "edges", frozenset(given))
        validate(self)

    # -- constructors -----------------------------------------------------
    @classmethod
    def empty(cls, p: int) -> "ColoredGraph":
        """Uncolored graph with no edges."""
        return cls(p, [[v] for v in range(1, p + 1)], [])

    @classmethod
    def uncolored(cls, p: int, edges: Iterable[Sequence[int]]) -> "ColoredGraph":
        """Every vertex and every edge in its own class."""
        return cls(p, [[v] for v in range(1, p + 1)], [[_pair(e)] for e in edges])

    @classmethod
    def complete(cls, p: int) -> "ColoredGraph":
        return cls.uncolored(p, [(i, j) for i in range(1, p + 1) for j in range(i + 1, p + 1)])

    # -- derived quantities -----------------------------------------------
    @property
    def n_classes(self) -> int:
        """Number of free parameters ``d_G``."""
        return len(self.vertex_classes) + len(self.edge_classes)

    def vertex_class_of(self, v: int) -> tuple[int, ...]:
        for block in self.vertex_classes:
            if v in block:
                return block
        raise KeyError(v)

    def edge_class_of(self, e: Sequence[int]) -> tuple[Pair, ...]:
        e = _pair(e)
        for block in self.edge_classes:
            if e in block:
                return block
        raise KeyError(e)

    def classes(self) -> list[tuple[Pair, ...]]:
        """All classes as tuples of positions, vertices written ``(i, i)``."""
        out = [tuple((v, v) for v in block) for block in self.vertex_classes]
        out.extend(self.edge_classes)
        return out

    def is_uncolored(self) -> bool:
        return all(len(b) == 1 for b in self.vertex_classes) and all(
            len(b) == 1 for b in self.edge_classes
        )

    # -- serialization ----------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "vertex_classes": [list(b) for b in self.vertex_classes],
            "edge_classes": [[list(e) for e in b] for b in self.edge_classes],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ColoredGraph":
        try:
            return cls(doc["p"], doc["vertex_classes"], doc.get("edge_classes", []))
        except KeyError as exc:
            raise GraphValidationError(f"graph document missing field {exc}") from None

    def dumps(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def loads(cls, text: str) -> "ColoredGraph":
        return cls.from_dict(json.loads(text))

    def write(self, path) -> None:
        Path(path).write_text(self.dumps() + "\n")

    @classmethod
    def read(cls, path) -> "ColoredGraph":
        return cls.loads(Path(path).read_text())

    def __str__(self) -> str:
        vc = " ".join("{" + ",".join(map(str, b)) + "}" for b in self.vertex_classes)
        ec = " ".join(
            "{" + ",".join(f"{i}-{j}" for i, j in b) + "}" for b in self.edge_classes
        )
        return f"p={self.p} V: {vc} E: {ec or '-'}"


def validate(g: ColoredGraph) -> None:
    """Raise a :class:`GraphValidationError` unless ``g`` is well formed."""
    if g.p < 1:
        raise GraphValidationError(f"vertex count must be positive, got {g.p}")
    seen: set[int] = set()
    for block in g.vertex_classes:
        if not block:
            raise GraphValidationError("empty vertex class")
        for v in block:
            if not 1 <= v <= g.p:
                raise UncoveredElement(f"vertex {v} outside 1..{g.p}")
            if v in seen:
                raise OverlappingClasses(f"vertex {v} appears in two classes")
            seen.add(v)
    for v in range(1, g.p + 1):
        if v not in seen:
            raise UncoveredElement(f"vertex {v} is in no vertex class")
    seen_e: set[Pair] = set()
    for block in g.edge_classes:
        if not block:
            raise GraphValidationError("empty edge class")
        for e in block:
            i, j = e
            if i == j:
                raise SelfLoop(f"self-loop at vertex {i}")
            if not (1 <= i <= g.p and 1 <= j <= g.p):
                raise UncoveredElement(f"edge {e} outside 1..{g.p}")
            if e in seen_e:
                raise OverlappingClasses(f"edge {e} appears in two classes")
            if e not in g.edges:
                raise UncoveredElement(f"edge {e} is colored but not in the edge set")
            seen_e.add(e)
    for e in g.edges:
        if e not in seen_e:
            raise UncoveredElement(f"edge {e} is in no edge class")


# ---------------------------------------------------------------------------
# free elements
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FreeElementMap:
    """Free positions of a colored graph.

    ``representative[c]`` is the lexicographic minimum of class ``c`` where
    classes are indexed as in :meth:`ColoredGraph.classes` (vertex classes
    first).  ``v_exponents[i - 1]`` counts the non-free positions in row
    ``i`` of the upper triangle, edges or not.
    """

    free: frozenset[Pair]
    representative: tuple[Pair, ...]
    v_exponents: tuple[int, ...]

    @property
    def ordered(self) -> list[Pair]:
        return sorted(self.free)


def free_elements(g: ColoredGraph) -> FreeElementMap:
    reps = tuple(min(block) for block in g.classes())
    free = frozenset(reps)
    v = []
    for i in range(1, g.p + 1):
        v.append(sum(1 for j in range(i, g.p + 1) if (i, j) not in free))
    return FreeElementMap(free, reps, tuple(v))


# ---------------------------------------------------------------------------
# moves
# ---------------------------------------------------------------------------


class MoveKind(enum.Enum):
    ADD_EDGE = "AddEdgeAsNewClass"
    REMOVE_EDGE = "RemoveSingletonEdge"
    MERGE_EDGE = "MergeEdgeIntoClass"
    SPLIT_EDGE = "SplitEdgeFromClass"
    MERGE_VERTEX = "MergeVertexIntoClass"
    SPLIT_VERTEX = "SplitVertexFromClass"


_INVERSE = {
    MoveKind.ADD_EDGE: MoveKind.REMOVE_EDGE,
    MoveKind.REMOVE_EDGE: MoveKind.ADD_EDGE,
    MoveKind.MERGE_EDGE: MoveKind.SPLIT_EDGE,
    MoveKind.SPLIT_EDGE: MoveKind.MERGE_EDGE,
    MoveKind.MERGE_VERTEX: MoveKind.SPLIT_VERTEX,
    MoveKind.SPLIT_VERTEX: MoveKind.MERGE_VERTEX,
}


@dataclass(frozen=True)
class GraphMove:
    """A single structural change.

    ``class_ref`` names the other class involved by one of its members: the
    destination of a merge, or the class left behind by a split.
    """

    kind: MoveKind
    target: Pair | int
    class_ref: Pair | int | None = None

    def inverse(self) -> "GraphMove":
        return GraphMove(_INVERSE[self.kind], self.target, self.class_ref)


def add_edge(e: Sequence[int]) -> GraphMove:
    return GraphMove(MoveKind.ADD_EDGE, _pair(e))


def merge_edge(e: Sequence[int], into: Sequence[int]) -> GraphMove:
    return GraphMove(MoveKind.MERGE_EDGE, _pair(e), _pair(into))


def merge_vertex(v: int, into: int) -> GraphMove:
    return GraphMove(MoveKind.MERGE_VERTEX, int(v), int(into))


def split_edge(g: ColoredGraph, e: Sequence[int]) -> GraphMove:
    e = _pair(e)
    rest = [x for x in g.edge_class_of(e) if x != e]
    if not rest:
        raise InapplicableMove(f"edge {e} is already a singleton class")
    return GraphMove(MoveKind.SPLIT_EDGE, e, rest[0])


def split_vertex(g: ColoredGraph, v: int) -> GraphMove:
    rest = [x for x in g.vertex_class_of(v) if x != v]
    if not rest:
        raise InapplicableMove(f"vertex {v} is already a singleton class")
    return GraphMove(MoveKind.SPLIT_VERTEX, int(v), rest[0])


def apply_move(g: ColoredGraph, m: GraphMove) -> ColoredGraph:
    vcs = [list(b) for b in g.vertex_classes]
    ecs = [list(b) for b in g.edge_classes]
    k = m.kind
    if k in (MoveKind.ADD_EDGE, MoveKind.REMOVE_EDGE, MoveKind.MERGE_EDGE, MoveKind.SPLIT_EDGE):
        e = _pair(m.target)
        if not (1 <= e[0] < e[1] <= g.p):
            raise InapplicableMove(f"pair {e} is not an off-diagonal position of a {g.p}-vertex graph")
        if k is MoveKind.ADD_EDGE:
            if e in g.edges:
                raise InapplicableMove(f"edge {e} already present")
            ecs.append([e])
        elif k is MoveKind.REMOVE_EDGE:
            if [e] not in ecs:
                raise InapplicableMove(f"edge {e} is not a singleton class")
            ecs.remove([e])
        elif k is MoveKind.MERGE_EDGE:
            ref = _pair(m.class_ref)
            if [e] not in ecs:
                raise InapplicableMove(f"edge {e} is not a singleton class")
            if ref == e or ref not in g.edges:
                raise InapplicableMove(f"no destination class containing {ref}")
            ecs.remove([e])
            for b in ecs:
                if ref in b:
                    b.append(e)
        else:
            ref = _pair(m.class_ref)
            blk = [b for b in ecs if e in b]
            if not blk or len(blk[0]) < 2 or ref not in blk[0] or ref == e:
                raise InapplicableMove(f"edge {e} cannot be split away from {ref}")
            blk[0].remove(e)
            ecs.append([e])
    else:
        v = int(m.target)
        if not 1 <= v <= g.p:
            raise InapplicableMove(f"vertex {v} outside 1..{g.p}")
        ref = int(m.class_ref)
        if k is MoveKind.MERGE_VERTEX:
            if [v] not in vcs:
                raise InapplicableMove(f"vertex {v} is not a singleton class")
            if ref == v or not 1 <= ref <= g.p:
                raise InapplicableMove(f"no destination class containing {ref}")
            vcs.remove([v])
            for b in vcs:
                if ref in b:
                    b.append(v)
        else:
            blk = [b for b in vcs if v in b]
            if len(blk[0]) < 2 or ref not in blk[0] or ref == v:
                raise InapplicableMove(f"vertex {v} cannot be split away from {ref}")
            blk[0].remove(v)
            vcs.append([v])
    return ColoredGraph(g.p, vcs, ecs)


def neighbor_pair(g1: ColoredGraph, g2: ColoredGraph) -> tuple[ColoredGraph, ColoredGraph, Pair]:
    """Order two neighboring graphs as ``(smaller, larger, freed)``.

    The larger graph has exactly one more free position than the smaller
    one and keeps every free position of the smaller one; ``freed`` is that
    extra position.  Raises :class:`NotNeighbors` otherwise.
    """
    if g1.p != g2.p:
        raise DimensionMismatch(f"graphs on {g1.p} and {g2.p} vertices")
    f1, f2 = free_elements(g1).free, free_elements(g2).free
    if len(f2) == len(f1) + 1 and f1 < f2:
        small, large, extra = g1, g2, f2 - f1
    elif len(f1) == len(f2) + 1 and f2 < f1:
        small, large, extra = g2, g1, f1 - f2
    else:
        raise NotNeighbors(f"{g1} and {g2} are not neighbors")
    (freed,) = extra
    # the larger graph must be the smaller one with one constraint lifted
    if not (small.edges <= large.edges and len(large.edges - small.edges) <= 1):
        raise NotNeighbors(f"{g1} and {g2} are not neighbors")
    return small, large, freed


# ---------------------------------------------------------------------------
# competitor classification
# ---------------------------------------------------------------------------


class Fit(enum.Enum):
    EQUAL = "Equal"
    OVERFITTING = "Overfitting"
    UNDERFITTING = "Underfitting"


def classify_competitor(g_true: ColoredGraph, g_s: ColoredGraph) -> Fit:
    if g_true.p != g_s.p:
        raise DimensionMismatch(f"graphs on {g_true.p} and {g_s.p} vertices")
    if g_true == g_s:
        return Fit.EQUAL
    if not g_true.edges <= g_s.edges:
        return Fit.UNDERFITTING
    true_edge_blocks = [set(b) for b in g_true.edge_classes]
    for block in g_s.edge_classes:
        common = set(block) & g_true.edges
        if common and not any(common <= tb for tb in true_edge_blocks):
            return Fit.UNDERFITTING
    true_vertex_blocks = [set(b) for b in g_true.vertex_classes]
    for block in g_s.vertex_classes:
        if not any(set(block) <= tb for tb in true_vertex_blocks):
            return Fit.UNDERFITTING
    return Fit.OVERFITTING


# ---------------------------------------------------------------------------
# named graphs used throughout the experiments
# ---------------------------------------------------------------------------


def three_vertex(label: str) -> ColoredGraph:
    """The five 3-vertex colored graphs labelled (a)-(e)."""
    label = label.strip("() ").lower()
    if label == "a":
        return ColoredGraph(3, [[1], [2], [3]], [[(1, 2)], [(1, 3), (2, 3)]])
    if label == "b":
        return ColoredGraph.complete(3)
    if label == "c":
        return ColoredGraph(3, [[1], [2, 3]], [[(1, 2)], [(1, 3)]])
    if label == "d":
        return ColoredGraph.uncolored(3, [(1, 2), (1, 3)])
    if label == "e":
        return ColoredGraph(3, [[1], [2, 3]], [[(1, 2)]])
    raise KeyError(f"unknown graph label {label!r}")


def star(p: int, hub_colored: bool = True) -> ColoredGraph:
    """Star on ``p`` vertices with hub ``p`` and every spoke in one class.

    With ``hub_colored`` the hub is its own vertex class and the leaves share
    one; otherwise all vertices share one class.
    """
    spokes = [(i, p) for i in range(1, p)]
    leaves = list(range(1, p))
    vcs = [leaves, [p]] if hub_colored else [leaves + [p]]
    return ColoredGraph(p, vcs, [spokes] if spokes else [])
