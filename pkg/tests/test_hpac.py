import random

import pytest
from hypothesis import given, strategies as st

from instances import fig4, links
from oracles import tiny_instance
from vcdn.ghtree import GomoryHuTree, TreeEdge, gomory_hu, scenario_flow_graph, tree_path
from vcdn.hpac import (
    MOVE,
    REPLICATE,
    PathReport,
    ResidualState,
    explore_path,
    find_rupture_node,
    hpac_solve,
    tree_links,
)
from vcdn.model import Demand, Scenario, ServerSpec, Vcdn, gen_erdos_renyi, gen_three_tier, load_small_scale
from vcdn.opac import Infeasible, route_assignment, solve_exact
from vcdn.solution import check_feasibility


def test_no_migration_when_origin_suffices():
    sc = fig4(origin_link=100, stream=(100, 100))
    sol = hpac_solve(sc)
    assert sol.x == {(1, 0)} and sol.objective == 0
    assert sol.y == {(1, 3, 0)}


def test_fig4_rupture_to_second_server():
    sc = fig4()
    sol = hpac_solve(sc)
    assert (2, 0) in sol.x
    assert sol.y == {(2, 3, 0)}
    assert sol.objective == 2
    assert sol.migration_paths[(2, 0)] == ((1, 2, 10),)


def test_equal_bottleneck_does_not_migrate():
    # bottleneck exactly equal to the demand is enough (strict shortfall triggers)
    sc = fig4(demand=40, origin_link=40, stream=(40, 100))
    assert hpac_solve(sc).objective == 0


def test_infeasible_when_nothing_on_path_can_host():
    sc = fig4(stream=(30, 30))
    with pytest.raises(Infeasible):
        hpac_solve(sc)


def test_move_mode_drops_idle_source():
    sc = fig4()
    sol = hpac_solve(sc, mode=MOVE)
    assert sol.x == {(2, 0)}
    with pytest.raises(ValueError):
        hpac_solve(sc, mode="teleport")


def test_replicate_keeps_busy_origin():
    # client 4 is served from the origin first; client 3 then needs a copy
    sc = Scenario(
        nodes=(1, 2, 3, 4), links=links((3, 2, 100), (2, 1, 10), (1, 4, 100)),
        servers=(ServerSpec(1, 50, 100), ServerSpec(2, 50, 100)), client_groups=(3, 4),
        vcdns=(Vcdn(0, 2, 1),), demands=(Demand(3, 0, 40), Demand(4, 0, 50)),
    )
    for mode in (REPLICATE, MOVE):
        sol = hpac_solve(sc, mode=mode)
        assert sol.x == {(1, 0), (2, 0)}
        assert sol.y == {(1, 4, 0), (2, 3, 0)}


def test_explore_path():
    t = GomoryHuTree((0, 1, 2), (TreeEdge(0, 1, 7), TreeEdge(1, 2, 3)))
    r = explore_path(t, 0, 2)
    assert r.path == tree_path(t, 0, 2)
    assert r.bottleneck == 3 and r.bottleneck_edge == TreeEdge(1, 2, 3)
    assert r.nodes == [0, 1, 2]
    with pytest.raises(KeyError):
        explore_path(t, 0, 9)


def _state(edges, servers, stream=100, storage=100):
    return ResidualState(
        edges={frozenset((a, b)): c for a, b, c in edges},
        stream={s: stream for s in servers}, storage={s: storage for s in servers},
        servers=frozenset(servers),
    )


def test_rupture_all_edges_fit_returns_host():
    edges = [(0, 1, 50), (1, 2, 50)]
    p = PathReport([TreeEdge(*e) for e in edges], 50, None)
    assert find_rupture_node(p, 40, _state(edges, {1, 2}), hosts={2}) == 2


def test_rupture_violation_next_to_host():
    edges = [(0, 1, 50), (1, 2, 10)]
    p = PathReport([TreeEdge(*e) for e in edges], 10, None)
    assert find_rupture_node(p, 40, _state(edges, {1, 2}), size=1, hosts={2}) == 1


def test_rupture_skips_client_nodes_and_full_servers():
    edges = [(0, 1, 50), (1, 2, 50), (2, 3, 5)]
    p = PathReport([TreeEdge(*e) for e in edges], 5, None)
    # node 2 is a client group, node 1 a server
    assert find_rupture_node(p, 40, _state(edges, {1, 3}), size=1, hosts={3}) == 1
    assert find_rupture_node(p, 40, _state(edges, {1, 3}, storage=0), size=1, hosts={3}) is None


@given(st.integers(2, 9), st.integers(0, 10**6))
def test_rupture_matches_linear_scan(n, seed):
    rng = random.Random(seed)
    nodes = list(range(n))
    edges = [(k, k + 1, rng.randint(1, 60)) for k in range(n - 1)]
    servers = {k for k in nodes[1:] if rng.random() < 0.6}
    res = _state(edges, servers)
    for s in servers:
        res.stream[s] = rng.randint(0, 60)
        res.storage[s] = rng.randint(0, 5)
    hosts = {k for k in servers if rng.random() < 0.3}
    demand, size = rng.randint(1, 60), rng.randint(1, 5)
    p = PathReport([TreeEdge(*e) for e in edges], min(e[2] for e in edges), None)
    expected = None
    for k in nodes:  # keep the last (nearest-to-host) qualifying node
        fits = all(c >= demand for _, _, c in edges[:k])
        ok = k in servers and res.stream[k] >= demand and (k in hosts or res.storage[k] >= size)
        if fits and ok:
            expected = k
    assert find_rupture_node(p, demand, res, size, hosts) == expected


@pytest.mark.parametrize("sc", [gen_three_tier(seed=s, n_vcdns=11) for s in (0, 9, 10)] + [load_small_scale()])
def test_capacities_respected_under_tree_semantics(sc):
    tree = gomory_hu(scenario_flow_graph(sc))
    sol = hpac_solve(sc, tree=tree)
    report = check_feasibility(sc, sol, tree_links(tree))
    assert report.feasible, report.summary()


def test_deterministic():
    sc = gen_erdos_renyi(40, 80, seed=1, n_vcdns=20)
    assert hpac_solve(sc) == hpac_solve(sc)


@pytest.mark.parametrize("seed", range(0, 60, 3))
def test_never_beats_optimum_when_exact_feasible(seed):
    sc = tiny_instance(seed)
    try:
        opt = solve_exact(sc)
        sol = hpac_solve(sc)
    except Infeasible:
        return
    routed = route_assignment(sc, sol)
    if routed is not None and check_feasibility(sc, routed).feasible:
        assert sol.objective >= opt.objective


def test_residual_state_initial():
    sc = fig4()
    tree = gomory_hu(scenario_flow_graph(sc))
    res = ResidualState.initial(sc, tree)
    assert res.storage == {1: 48, 2: 50}
    assert res.stream == {1: 30, 2: 100}
    assert sorted(res.edges.values()) == [10, 100]
