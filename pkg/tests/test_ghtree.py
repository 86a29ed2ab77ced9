import itertools
import random

import pytest
from hypothesis import given, strategies as st

from instances import links
from oracles import random_connected_edges
from vcdn.flow import FlowGraph, max_flow
from vcdn.ghtree import (
    GomoryHuTree,
    TreeEdge,
    gomory_hu,
    scenario_flow_graph,
    tree_min_cut,
    tree_path,
    write_edgelist,
)
from vcdn.model import Demand, Link, Scenario, ServerSpec, Vcdn, gen_erdos_renyi


@st.composite
def connected_graphs(draw, max_n=10):
    n = draw(st.integers(1, max_n))
    rng = random.Random(draw(st.integers(0, 10**6)))
    edges = random_connected_edges(rng, n, draw(st.floats(0, 0.7)))
    return FlowGraph.from_edges(edges, nodes=range(n))


def is_tree(t: GomoryHuTree) -> bool:
    parent = {n: n for n in t.nodes}

    def find(a):
        while parent[a] != a:
            a = parent[a]
        return a

    for e in t.edges:
        ra, rb = find(e.a), find(e.b)
        if ra == rb:
            return False
        parent[ra] = rb
    return len(t.edges) == len(t.nodes) - 1


def test_two_nodes():
    t = gomory_hu(FlowGraph.from_edges([(0, 1, 5)]))
    assert t.edges == (TreeEdge(0, 1, 5),)


def test_single_node():
    t = gomory_hu(FlowGraph([7]))
    assert t.edges == () and t.nodes == (7,)


def test_tree_input_is_its_own_tree():
    edges = [(0, 1, 4), (1, 2, 9), (1, 3, 2), (3, 4, 6)]
    t = gomory_hu(FlowGraph.from_edges(edges))
    assert sorted((e.a, e.b, e.capacity) for e in t.edges) == sorted(edges)


def test_errors():
    with pytest.raises(ValueError):
        gomory_hu(FlowGraph())
    with pytest.raises(ValueError):
        gomory_hu(FlowGraph.from_edges([(0, 1, 1), (2, 3, 1)]))


@given(connected_graphs())
def test_gomory_hu_property(g):
    t = gomory_hu(g)
    assert is_tree(t)
    assert t.steiner_cuts <= max(len(g) - 1, 0)
    for a, b in itertools.combinations(g.nodes, 2):
        assert tree_min_cut(t, a, b) == max_flow(g, a, b)[0]


def test_deterministic():
    g = scenario_flow_graph(gen_erdos_renyi(30, 60, seed=1))
    assert gomory_hu(g) == gomory_hu(g)


def test_edge_count_halved_on_sparse_graph():
    # a graph with 2(n-1) edges collapses to n-1 tree edges
    sc = gen_erdos_renyi(40, 78, seed=0)
    t = gomory_hu(scenario_flow_graph(sc))
    assert len(t.edges) == 39
    assert len(t.edges) / 78 == pytest.approx(0.5)


def test_tree_min_cut_on_path():
    t = GomoryHuTree((0, 1, 2, 3), (TreeEdge(0, 1, 9), TreeEdge(1, 2, 4), TreeEdge(2, 3, 7)))
    assert tree_min_cut(t, 0, 3) == 4
    assert tree_min_cut(t, 1, 2) == 4
    assert tree_min_cut(t, 2, 3) == 7


def test_tree_path():
    t = GomoryHuTree(("a", "x", "b"), (TreeEdge("a", "x", 3), TreeEdge("b", "x", 5)))
    assert tree_path(t, "a", "x") == [TreeEdge("a", "x", 3)]
    assert tree_path(t, "a", "b") == [TreeEdge("a", "x", 3), TreeEdge("x", "b", 5)]
    assert tree_path(t, "b", "a") == [TreeEdge("b", "x", 5), TreeEdge("x", "a", 3)]
    with pytest.raises(ValueError):
        tree_path(t, "a", "a")
    with pytest.raises(KeyError):
        tree_path(t, "a", "zz")


@given(connected_graphs(8), st.data())
def test_tree_path_consistent_with_min_cut(g, data):
    t = gomory_hu(g)
    if len(g) < 2:
        return
    a, b = data.draw(st.lists(st.sampled_from(g.nodes), min_size=2, max_size=2, unique=True))
    p = tree_path(t, a, b)
    assert p[0].a == a and p[-1].b == b
    assert all(e.b == f.a for e, f in zip(p, p[1:]))
    assert min(e.capacity for e in p) == tree_min_cut(t, a, b)


def test_scenario_flow_graph_symmetrizes_by_min():
    sc = Scenario(
        nodes=(0, 1, 2),
        links=(Link(0, 1, 10), Link(1, 0, 4), Link(1, 2, 6)),
        servers=(ServerSpec(0, 1, 1),), client_groups=(1, 2), vcdns=(Vcdn(0, 1, 0),),
        demands=(Demand(2, 0, 1),),
    )
    g = scenario_flow_graph(sc)
    assert g.capacity(0, 1) == g.capacity(1, 0) == 4
    assert g.capacity(1, 2) == 0


def test_scenario_flow_graph_symmetric_links():
    sc = Scenario(
        nodes=(0, 1), links=links((0, 1, 12)), servers=(ServerSpec(0, 1, 1),),
        client_groups=(1,), vcdns=(Vcdn(0, 1, 0),), demands=(),
    )
    assert scenario_flow_graph(sc).capacity(0, 1) == 12


def test_write_edgelist(tmp_path):
    t = gomory_hu(FlowGraph.from_edges([(0, 1, 5), (1, 2, 3)]))
    path = tmp_path / "tree.txt"
    write_edgelist(t, path)
    assert path.read_text() == "0 1 5\n1 2 3\n"
