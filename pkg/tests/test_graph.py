import json

import pytest
from hypothesis import given, settings

from cggm.graph import (
    ColoredGraph,
    Fit,
    GraphValidationError,
    InapplicableMove,
    NotNeighbors,
    OverlappingClasses,
    SelfLoop,
    UncoveredElement,
    add_edge,
    apply_move,
    classify_competitor,
    three_vertex,
    free_elements,
    merge_edge,
    merge_vertex,
    neighbor_pair,
    split_edge,
    split_vertex,
    star,
)

from .conftest import colored_graphs


def test_free_elements_three_vertexe():
    fm = free_elements(three_vertex("e"))
    assert fm.ordered == [(1, 1), (1, 2), (2, 2)]
    # row 1: (1,3) is not free; row 2: (2,3); row 3: (3,3)
    assert fm.v_exponents == (1, 1, 1)


def test_free_elements_colored_edges():
    g = three_vertex("a")
    fm = free_elements(g)
    assert fm.ordered == [(1, 1), (1, 2), (1, 3), (2, 2), (3, 3)]
    assert fm.v_exponents == (0, 1, 0)


def test_class_counts():
    assert three_vertex("b").n_classes == 6
    assert star(8).n_classes == 3
    assert star(8, hub_colored=False).n_classes == 2


@pytest.mark.parametrize(
    "doc, exc",
    [
        ({"p": 3, "vertex_classes": [[1, 2], [2, 3]], "edge_classes": []}, OverlappingClasses),
        ({"p": 3, "vertex_classes": [[1, 2]], "edge_classes": []}, UncoveredElement),
        ({"p": 2, "vertex_classes": [[1], [2]], "edge_classes": [[[1, 1]]]}, SelfLoop),
        ({"p": 2, "vertex_classes": [[1], [2]], "edge_classes": [[[1, 3]]]}, UncoveredElement),
        ({"p": 2, "vertex_classes": [[1], [2]]}, None),
        ({"vertex_classes": [[1]]}, GraphValidationError),
    ],
)
def test_validation(doc, exc):
    if exc is None:
        ColoredGraph.from_dict(doc)
    else:
        with pytest.raises(exc):
            ColoredGraph.from_dict(doc)


def test_explicit_edges_must_match_classes():
    with pytest.raises(UncoveredElement):
        ColoredGraph(3, [[1], [2], [3]], [[(1, 2)]], edges=[(1, 2), (2, 3)])


@given(colored_graphs())
@settings(max_examples=60, deadline=None)
def test_roundtrip(g):
    assert ColoredGraph.loads(g.dumps()) == g
    doc = json.loads(g.dumps())
    assert set(doc) == {"p", "vertex_classes", "edge_classes"}


def test_equality_ignores_ordering():
    a = ColoredGraph(3, [[3, 2], [1]], [[(2, 1)]])
    b = ColoredGraph(3, [[1], [2, 3]], [[(1, 2)]])
    assert a == b and hash(a) == hash(b)


def test_moves_and_inverses():
    g = three_vertex("e")
    g2 = apply_move(g, add_edge((1, 3)))
    assert g2 == three_vertex("d").__class__(3, [[1], [2, 3]], [[(1, 2)], [(1, 3)]])
    g3 = apply_move(g2, merge_edge((1, 3), (1, 2)))
    assert g3.edge_class_of((1, 3)) == ((1, 2), (1, 3))
    assert apply_move(g3, split_edge(g3, (1, 3))) == g2
    g4 = apply_move(ColoredGraph.empty(3), merge_vertex(3, 1))
    assert g4.vertex_class_of(1) == (1, 3)
    assert apply_move(g4, split_vertex(g4, 3)) == ColoredGraph.empty(3)
    assert apply_move(g2, add_edge((1, 3)).inverse()) == g


@pytest.mark.parametrize(
    "move",
    [add_edge((1, 2)), merge_edge((1, 2), (2, 3)), merge_vertex(2, 2), add_edge((1, 4))],
)
def test_inapplicable(move):
    with pytest.raises(InapplicableMove):
        apply_move(three_vertex("e"), move)


@pytest.mark.parametrize(
    "g1, g2, freed",
    [("e", "c", (1, 3)), ("c", "d", (3, 3)), ("a", "b", (2, 3))],
)
def test_neighbor_pairs(g1, g2, freed):
    small, large, f = neighbor_pair(three_vertex(g2), three_vertex(g1))
    assert (small, large, f) == (three_vertex(g1), three_vertex(g2), freed)


def test_not_neighbors():
    with pytest.raises(NotNeighbors):
        neighbor_pair(three_vertex("e"), three_vertex("b"))


def test_star_neighbors():
    small, large, f = neighbor_pair(star(8), star(8, hub_colored=False))
    assert small == star(8, hub_colored=False) and f == (8, 8)


def test_classify_competitor():
    t = three_vertex("c")
    assert classify_competitor(t, t) is Fit.EQUAL
    assert classify_competitor(t, three_vertex("d")) is Fit.OVERFITTING
    assert classify_competitor(t, three_vertex("e")) is Fit.UNDERFITTING
    assert classify_competitor(t, ColoredGraph(3, [[1, 2, 3]], [[(1, 2)], [(1, 3)]])) is Fit.UNDERFITTING
