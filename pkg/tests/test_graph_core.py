import json
import math

import pytest
from hypothesis import given, settings, strategies as st

from spinpaths.errors import DuplicateEdge, GhostInSet, SelfLoop, VertexOutOfRange
from spinpaths.graph_core import (attach_ghost, boundary_sets, build_graph, cycle_graph,
                                  graph_distance, graph_from_json, grid_graph, make_graph,
                                  path_graph, tree_graph)


def test_build_graph_canonicalizes_edges():
    g = build_graph([(1, 0), (2, 1)], 3)
    assert g.edges == ((0, 1), (1, 2))
    assert g.adjacency == ((1,), (0, 2), (1,))
    assert g.edge_index(2, 1) == 1


@pytest.mark.parametrize("edges, n, exc", [
    ([(0, 0)], 2, SelfLoop),
    ([(0, 1), (1, 0)], 2, DuplicateEdge),
    ([(0, 3)], 3, VertexOutOfRange),
])
def test_build_graph_rejects_bad_input(edges, n, exc):
    with pytest.raises(exc):
        build_graph(edges, n)


def test_grid_3x3():
    g = grid_graph(3, 3)
    assert g.n == 9
    assert len(g.edges) == 12
    assert graph_distance(g, 0, 8) == 4
    assert g.max_degree == 4


def test_generators():
    assert len(path_graph(5).edges) == 4
    assert len(cycle_graph(6).edges) == 6
    t = tree_graph(3, 2)
    assert t.n == 1 + 3 + 6
    assert t.degree(0) == 3
    assert make_graph("grid", 2, 3).n == 6
    with pytest.raises(ValueError):
        make_graph("torus", 3)
    with pytest.raises(ValueError):
        cycle_graph(2)


def test_disconnected_distance_is_infinite():
    g = build_graph([(0, 1)], 3)
    assert graph_distance(g, 0, 2) == math.inf
    assert graph_distance(g, 2, 2) == 0


def test_ghost_layout():
    eg = attach_ghost(path_graph(3))
    assert eg.ghost == 3
    assert eg.n_orig_edges == 2
    assert eg.n_edges == 5
    assert eg.ghost_edge(1) == 3
    assert eg.edges[eg.ghost_edge(2)] == (2, 3)
    assert eg.incident(1) == (0, 1, 3)
    assert eg.incident(eg.ghost) == (2, 3, 4)
    assert eg.edge_label(3) == "1-g"
    assert eg.parse_edge_label("1-g") == 3
    assert eg.parse_edge_label("1-2") == 1
    assert eg.other(3, 1) == eg.ghost


def test_boundary_sets_on_path():
    eg = attach_ghost(path_graph(4))
    b = boundary_sets(eg, [1, 2])
    assert b.boundary_E_A == {(0, 1), (2, 3)}
    assert b.ext_boundary == {0, 3}
    assert b.int_boundary == {1, 2}
    assert b.Eg_A == {(1, 4), (2, 4)}
    assert b.E_A == {(0, 1), (1, 2), (2, 3), (1, 4), (2, 4)}
    with pytest.raises(GhostInSet):
        boundary_sets(eg, [eg.ghost])


def test_graph_json_roundtrip(tmp_path):
    g = grid_graph(2, 3)
    path = tmp_path / "g.json"
    path.write_text(json.dumps(g.to_json()))
    assert graph_from_json(path) == g


@st.composite
def random_graphs(draw):
    n = draw(st.integers(2, 8))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs)))
    return build_graph(chosen, n)


@settings(max_examples=60, deadline=None)
@given(random_graphs(), st.data())
def test_distance_is_a_metric(g, data):
    x, y, z = (data.draw(st.integers(0, g.n - 1)) for _ in range(3))
    dxy = graph_distance(g, x, y)
    assert dxy == graph_distance(g, y, x)
    assert (dxy == 0) == (x == y)
    assert dxy <= graph_distance(g, x, z) + graph_distance(g, z, y)


@settings(max_examples=60, deadline=None)
@given(random_graphs(), st.data())
def test_boundary_partition(g, data):
    eg = attach_ghost(g)
    A = data.draw(st.sets(st.integers(0, g.n - 1)))
    b = boundary_sets(eg, A)
    assert b.boundary_E_A <= b.E_A
    assert b.int_boundary <= A
    assert not (b.ext_boundary & A)
    for u, v in b.boundary_E_A:
        assert (u in A) != (v in A)
