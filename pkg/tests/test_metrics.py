import numpy as np
import pytest
from hypothesis import given, settings

from cggm.graph import ColoredGraph, DimensionMismatch, three_vertex, star
from cggm.metrics import (
    EmptyRuns,
    acc_all,
    class_metrics,
    d0,
    format_matrix,
    inclusion_probabilities,
    recovery_report,
)

from .conftest import colored_graphs


def test_hand_computed_case():
    t, h = three_vertex("c"), three_vertex("e")
    assert d0(t, h) == pytest.approx(2 / 3)
    dv, de = class_metrics(t, h)
    assert dv == [1.0, 1.0]
    # class {1-3}: (1-3 vs 1-2) apart, correct; (1-3 vs 2-3) both absent, wrong
    assert de == [1.0, 0.5]
    assert recovery_report(t, h).acc_all == pytest.approx((2 / 3 + 3.5) / 5)


def test_merged_vertices_penalized():
    t = ColoredGraph.empty(3)
    h = ColoredGraph(3, [[1, 2, 3]], [])
    dv, de = class_metrics(t, h)
    assert dv == [0.0, 0.0, 0.0] and de == []
    assert d0(t, h) == 1.0


@given(colored_graphs(min_p=2))
@settings(max_examples=50, deadline=None)
def test_perfect_recovery_is_exactly_one(g):
    rep = recovery_report(g, g)
    assert rep.d0 == 1.0 and all(x == 1.0 for x in rep.d_vertex + rep.d_edge)
    assert rep.acc_all == 1.0


@given(colored_graphs(min_p=3, max_p=5), colored_graphs(min_p=3, max_p=5))
@settings(max_examples=100, deadline=None)
def test_metrics_in_unit_interval(a, b):
    if a.p != b.p:
        with pytest.raises(DimensionMismatch):
            d0(a, b)
        return
    rep = recovery_report(a, b)
    for x in [rep.d0, rep.acc_all, *rep.d_vertex, *rep.d_edge]:
        assert 0.0 <= x <= 1.0


def test_acc_all_mean():
    assert acc_all(0.5, [1.0], [0.0, 1.0]) == pytest.approx(0.625)


def test_inclusion_probabilities():
    runs = [three_vertex("c"), three_vertex("e"), three_vertex("b"), three_vertex("e")]
    ip = inclusion_probabilities(runs)
    assert ip[0, 1] == 1.0 and ip[0, 2] == 0.5 and ip[1, 2] == 0.25
    assert np.isnan(ip[0, 0]) and np.array_equal(ip, ip.T, equal_nan=True)
    assert "0.50" in format_matrix(ip)
    with pytest.raises(EmptyRuns):
        inclusion_probabilities([])
    with pytest.raises(DimensionMismatch):
        inclusion_probabilities([three_vertex("c"), star(4)])
