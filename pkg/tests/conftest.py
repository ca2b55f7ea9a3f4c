import numpy as np
import pytest
from hypothesis import strategies as st

from cggm.graph import ColoredGraph


def random_partition(rng, items, n_blocks_max=None):
    items = list(items)
    if not items:
        return []
    k = rng.integers(1, (n_blocks_max or len(items)) + 1)
    labels = rng.integers(0, k, size=len(items))
    blocks = [[it for it, lab in zip(items, labels) if lab == b] for b in range(k)]
    return [b for b in blocks if b]


def random_graph(rng, p, edge_prob=0.5):
    vcs = random_partition(rng, range(1, p + 1))
    edges = [(i, j) for i in range(1, p + 1) for j in range(i + 1, p + 1) if rng.random() < edge_prob]
    return ColoredGraph(p, vcs, random_partition(rng, edges))


@st.composite
def colored_graphs(draw, min_p=1, max_p=6):
    p = draw(st.integers(min_p, max_p))
    seed = draw(st.integers(0, 2**32 - 1))
    return random_graph(np.random.default_rng(seed), p)


def random_free_values(rng, g):
    from cggm.graph import free_elements

    out = {}
    for i, j in free_elements(g).ordered:
        out[(i, j)] = float(rng.uniform(0.5, 2.0)) if i == j else float(rng.normal(0, 0.4))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
