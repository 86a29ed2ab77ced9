from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from instances import links
from vcdn.metrics import (
    PARALLEL,
    SEQUENTIAL,
    cost_report,
    gap,
    gap_report,
    migration_cost,
    migration_time,
    replica_number,
    vcache_cost,
    vstream_cost,
)
from vcdn.model import Demand, Scenario, ServerSpec, Vcdn, load_small_scale
from vcdn.opac import objective_value, solve_exact
from vcdn.solution import PlacementSolution


def scenario(storage=(100, 150), stream=(400, 600), size=1):
    return Scenario(
        nodes=(0, 1, 2, 3), links=links((0, 1, 80), (1, 2, 200), (2, 3, 100)),
        servers=(ServerSpec(0, storage[0], stream[0]), ServerSpec(2, storage[1], stream[1])),
        client_groups=(1, 3), vcdns=(Vcdn(0, size, 0), Vcdn(1, 2, 2)),
        demands=(Demand(1, 0, 40), Demand(3, 1, 10)),
    )


def sol(x, y=(), paths=None):
    return PlacementSolution("hand", frozenset(x), frozenset(y), {}, 0, paths or {})


def test_no_migrations():
    s = sol({(0, 0), (2, 1)})
    assert migration_time(scenario(), s, SEQUENTIAL) == 0
    assert migration_time(scenario(), s, PARALLEL) == 0
    assert replica_number(scenario(), s) == 0


def test_one_gigabyte_over_80_mbps_takes_100_s():
    s = sol({(2, 0)}, paths={(2, 0): ((0, 1, 80), (1, 2, 200))})
    assert migration_time(scenario(), s, SEQUENTIAL) == 100
    assert migration_time(scenario(), s, PARALLEL) == 100


def test_sequential_sums_parallel_takes_max():
    s = sol({(2, 0), (0, 1)}, paths={(2, 0): ((0, 1, 80), (1, 2, 200)), (0, 1): ((2, 1, 200), (1, 0, 80))})
    # 8 Gb / 0.08 Gbps = 100 s and 16 Gb / 0.08 Gbps = 200 s
    assert migration_time(scenario(), s, SEQUENTIAL) == 300
    assert migration_time(scenario(), s, PARALLEL) == 200
    with pytest.raises(ValueError):
        migration_time(scenario(), s, "sideways")


def test_zero_capacity_path_edge():
    s = sol({(2, 0)}, paths={(2, 0): ((0, 1, 0),)})
    with pytest.raises(ZeroDivisionError):
        migration_time(scenario(), s)


def test_replica_number():
    sc = Scenario(
        nodes=(0, 1, 2, 3), links=links((0, 1, 9), (1, 2, 9), (2, 3, 9)),
        servers=(ServerSpec(0, 9, 9), ServerSpec(1, 9, 9), ServerSpec(2, 9, 9)), client_groups=(3,),
        vcdns=(Vcdn(0, 1, 0),), demands=(),
    )
    assert replica_number(sc, sol({(0, 0)})) == 0
    assert replica_number(sc, sol({(0, 0), (1, 0), (2, 0)})) == 2


def test_vcache():
    assert vcache_cost(scenario(), sol(set())) == 0
    assert vcache_cost(scenario(size=10), sol({(0, 0)})) == Fraction(4, 100)


def test_vstream():
    assert vstream_cost(scenario(), sol(set())) == 0
    assert vstream_cost(scenario(), sol({(0, 0)}, {(0, 1, 0)})) == Fraction(4, 100)


def test_gap():
    assert gap(5, 5) == 0
    assert gap(Fraction("100.66"), 100) == Fraction("0.66")
    assert gap(3, 0) is None


def test_migration_cost_equals_objective():
    sc = load_small_scale().restrict_vcdns(8)
    s = solve_exact(sc)
    assert migration_cost(sc, s) == objective_value(sc, s) == s.objective


def test_gap_report_fields():
    sc = load_small_scale().restrict_vcdns(6)
    r = cost_report(sc, solve_exact(sc))
    g = gap_report(r, r)
    assert g["migration_cost"] == 0 and g["vstream_cost"] == 0


@given(st.lists(st.tuples(st.integers(1, 8), st.integers(1, 500)), min_size=1, max_size=6))
def test_parallel_never_exceeds_sequential(terms):
    n = len(terms)
    sc = Scenario(
        nodes=tuple(range(n + 1)), links=links(*[(0, k, 10) for k in range(1, n + 1)]),
        servers=tuple(ServerSpec(k, 99, 99) for k in range(n + 1)), client_groups=(),
        vcdns=tuple(Vcdn(k, size, 0) for k, (size, _) in enumerate(terms)), demands=(),
    )
    paths = {(k + 1, k): ((0, k + 1, cap),) for k, (_, cap) in enumerate(terms)}
    s = sol(set(paths), paths=paths)
    seq, par = migration_time(sc, s, SEQUENTIAL), migration_time(sc, s, PARALLEL)
    direct = [Fraction(size * 8 * 1000, cap) for size, cap in terms]
    assert seq == sum(direct) and par == max(direct)
    assert par <= seq
    assert (par == seq) == (n == 1)
