"""Exact placement/migration by branch-and-bound.

The integer model: binary x (vCDN f hosted on server s), y (client v served
f by server s) and z (arc (i, j) carries the f-stream of v). Every demanded
(v, f) is served by exactly one hosting server, server stream and storage
capacities hold, each served stream follows one path from its server to the
client and the summed throughput on every arc respects its capacity. The
objective is the total migration cost of the x placement.

Search branches on the serving server of each demand, largest throughput
first. ``x`` is implied: exactly the (server, vcdn) pairs some demand uses,
because extra copies only add cost and storage. Routing is checked exactly
by a backtracking search over simple paths, so a branch is kept only if its
partial assignment can be routed unsplittably.

Among equal-cost optima the placement whose x bit vector, ordered by
(server id, vcdn id) with the first position most significant, is smallest
wins.
"""

from __future__ import annotations

import heapq
import logging
import math
import time
from collections import deque
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import csr_matrix

from .model import Number, Scenario
from .solution import BudgetExceeded, FeasibilityReport, Infeasible, PlacementSolution, check_feasibility

log = logging.getLogger(__name__)

__all__ = [
    "BudgetExceeded",
    "FeasibilityReport",
    "Infeasible",
    "PlacementSolution",
    "check_feasibility",
    "migration_path",
    "objective_value",
    "route_assignment",
    "solve_exact",
]


class _OutOfSteps(Exception):
    pass


def objective_value(sc: Scenario, sol: PlacementSolution) -> Number:
    return sum((sc.migration_cost(s, f) for s, f in sol.x), 0)


# -- routing ------------------------------------------------------------------

class Router:
    """Unsplittable routing of fixed (server, client, throughput) streams."""

    def __init__(self, sc: Scenario, links: dict | None = None, max_steps: int | None = None,
                 deadline: float | None = None):
        self.cap = dict(sc.capacity if links is None else links)
        self.out: dict[int, list[int]] = {n: [] for n in sc.nodes}
        self.into: dict[int, list[int]] = {n: [] for n in sc.nodes}
        for i, j in sorted(self.cap):
            self.out[i].append(j)
            self.into[j].append(i)
        self._dist: dict[int, dict[int, int]] = {}
        self.max_steps = max_steps
        self.deadline = deadline
        self.steps = 0

    def dist_to(self, target: int) -> dict[int, int]:
        if target not in self._dist:
            dist = {target: 0}
            queue = deque([target])
            while queue:
                u = queue.popleft()
                for w in self.into[u]:
                    if w not in dist:
                        dist[w] = dist[u] + 1
                        queue.append(w)
            self._dist[target] = dist
        return self._dist[target]

    def _tick(self):
        self.steps += 1
        if self.max_steps is not None and self.steps > self.max_steps:
            raise _OutOfSteps
        if self.deadline is not None and self.steps % 256 == 0 and time.monotonic() > self.deadline:
            raise _OutOfSteps

    def paths(self, s: int, v: int, d: Number, residual: dict):
        """Simple s->v paths whose every arc has residual >= d, near-shortest first."""
        dist = self.dist_to(v)
        if s not in dist:
            return
        order = {
            u: sorted((w for w in self.out[u] if w in dist), key=lambda w: (dist[w], w))
            for u in self.out
        }
        visited = {s}
        arcs: list[tuple[int, int]] = []

        def walk(u):
            if u == v:
                yield list(arcs)
                return
            for w in order[u]:
                if w in visited or residual[(u, w)] < d:
                    continue
                self._tick()
                visited.add(w)
                arcs.append((u, w))
                yield from walk(w)
                arcs.pop()
                visited.discard(w)

        yield from walk(s)

    def endpoints_packable(self, items, residual) -> bool:
        """Necessary condition: streams fit the arcs leaving each server and entering each client."""
        by_src: dict[int, list] = {}
        by_dst: dict[int, list] = {}
        for s, v, d in items:
            by_src.setdefault(s, []).append(d)
            by_dst.setdefault(v, []).append(d)
        for s, ds in by_src.items():
            if not self._pack(ds, [residual[(s, w)] for w in self.out[s]]):
                return False
        for v, ds in by_dst.items():
            if not self._pack(ds, [residual[(u, v)] for u in self.into[v]]):
                return False
        return True

    def _pack(self, sizes, bins) -> bool:
        sizes = sorted(sizes, reverse=True)
        if sum(sizes) <= min(bins, default=0) or not sizes:
            return True
        if sum(sizes) > sum(bins):
            return False
        bins = list(bins)

        def fit(k):
            if k == len(sizes):
                return True
            self._tick()
            tried = set()
            for b in range(len(bins)):
                if bins[b] >= sizes[k] and bins[b] not in tried:
                    tried.add(bins[b])
                    bins[b] -= sizes[k]
                    if fit(k + 1):
                        return True
                    bins[b] += sizes[k]
            return False

        return fit(0)

    def route(self, items: list[tuple[int, int, Number]], residual: dict | None = None):
        """Paths for all ``items`` (server, client, throughput) or None if impossible.

        ``residual`` (copied, not modified) defaults to the full capacities.
        """
        residual = dict(self.cap if residual is None else residual)
        if not self.endpoints_packable(items, residual):
            return None
        order = sorted(range(len(items)), key=lambda k: (-items[k][2], k))
        chosen: dict[int, list] = {}

        def place(pos):
            if pos == len(order):
                return True
            k = order[pos]
            s, v, d = items[k]
            for path in self.paths(s, v, d, residual):
                for a in path:
                    residual[a] -= d
                chosen[k] = path
                if place(pos + 1):
                    return True
                for a in path:
                    residual[a] += d
            return False

        if not place(0):
            return None
        return [chosen[k] for k in range(len(items))], residual


def route_assignment(sc: Scenario, sol: PlacementSolution, links: dict | None = None,
                     max_steps: int | None = 200_000) -> PlacementSolution | None:
    """Re-route ``sol``'s server assignment on real links.

    Returns a copy of ``sol`` with ``z`` replaced by exact paths, or None when
    no unsplittable routing exists. Raises :class:`BudgetExceeded` when the
    step budget runs out first.
    """
    demand = {(d.client, d.vcdn): d.throughput for d in sc.active_demands}
    keys = sorted((v, f) for s, v, f in sol.y if (v, f) in demand)
    server = {(v, f): s for s, v, f in sol.y if (v, f) in demand}
    items = [(server[k], k[0], demand[k]) for k in keys]
    router = Router(sc, links, max_steps=max_steps)
    try:
        routed = router.route(items)
    except _OutOfSteps:
        raise BudgetExceeded("routing step budget exhausted") from None
    if routed is None:
        return None
    paths, _ = routed
    z = {k: tuple(p) for k, p in zip(keys, paths)}
    return PlacementSolution(sol.solver, sol.x, sol.y, z, sol.objective, dict(sol.migration_paths))


# -- migration paths -------------------------------------------------------------

def migration_path(sc: Scenario, origin: int, target: int) -> tuple:
    """Min-hop origin->target path with the largest bottleneck among min-hop paths."""
    if origin == target:
        return ()
    cap = sc.capacity
    out = sc.out_links
    dist = {origin: 0}
    layers = [[origin]]
    while target not in dist and layers[-1]:
        nxt = []
        for u in layers[-1]:
            for w, _ in out[u]:
                if w not in dist:
                    dist[w] = dist[u] + 1
                    nxt.append(w)
        layers.append(sorted(nxt))
    if target not in dist:
        raise ValueError(f"no directed path from {origin} to {target}")
    best = {origin: (None, None)}  # node -> (bottleneck, predecessor)
    for layer in layers[1:]:
        for w in layer:
            cand = None
            for u in sorted(best):
                if dist.get(u) == dist[w] - 1 and (u, w) in cap:
                    b = cap[(u, w)] if best[u][0] is None else min(best[u][0], cap[(u, w)])
                    if cand is None or b > cand[0]:
                        cand = (b, u)
            if cand is not None:
                best[w] = cand
        if target in best:
            break
    hops = []
    w = target
    while w != origin:
        u = best[w][1]
        hops.append((u, w, cap[(u, w)]))
        w = u
    return tuple(reversed(hops))


# -- branch and bound -------------------------------------------------------------

def _widest(sc: Scenario, source: int) -> dict[int, Number]:
    """Largest bottleneck from ``source`` to every node over directed links."""
    best = {source: None}
    heap = [(0, 0, source)]
    done = set()
    counter = 0
    while heap:
        _, _, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        for w, c in sc.out_links[u]:
            b = c if best[u] is None else min(best[u], c)
            if w not in best or (best[w] is not None and b > best[w]):
                best[w] = b
                counter += 1
                heapq.heappush(heap, (-b, counter, w))
    return best


def _solve_lp(costs, eq_rows, ub_rows, ub_rhs) -> float | None:
    """Optimal value of min c.x, each eq row sums to 1, ub rows <= rhs, 0 <= x <= 1."""
    n = len(costs)

    def matrix(rows):
        data, idx, ptr = [], [], [0]
        for row in rows:
            for entry in row:
                col, val = entry if isinstance(entry, tuple) else (entry, 1.0)
                idx.append(col)
                data.append(val)
            ptr.append(len(idx))
        return csr_matrix((data, idx, ptr), shape=(len(rows), n))

    res = linprog(
        np.asarray(costs),
        A_ub=matrix(ub_rows) if ub_rows else None,
        b_ub=np.asarray(ub_rhs) if ub_rows else None,
        A_eq=matrix(eq_rows),
        b_eq=np.ones(len(eq_rows)),
        bounds=(0, 1),
        method="highs",
    )
    if res.status == 2:
        return None
    if res.status != 0:
        return 0.0  # no usable bound; fall back to the trivial one
    return float(res.fun)


def _round_up_to_grid(value: float, grid: int) -> Fraction:
    """Smallest multiple of 1/grid not below ``value`` minus a float safety margin."""
    return Fraction(max(0, math.ceil(value * grid - 1e-6 * max(1.0, abs(value) * grid))), grid)


@dataclass
class _Item:
    client: int
    vcdn: int
    demand: Number
    size: Number


def solve_exact(sc: Scenario, time_budget: float | None = None, node_budget: int | None = None) -> PlacementSolution:
    """Provably optimal placement.

    Raises :class:`Infeasible` when nothing satisfies the constraints and
    :class:`BudgetExceeded` (carrying the incumbent, if any) when the time or
    node budget runs out.
    """
    deadline = None if time_budget is None else time.monotonic() + time_budget
    servers = sorted(sc.server_ids)
    spec = sc.server_map
    vsize = {f.id: f.size for f in sc.vcdns}
    items = [
        _Item(d.client, d.vcdn, d.throughput, vsize[d.vcdn])
        for d in sorted(sc.active_demands, key=lambda d: (-d.throughput, d.client, d.vcdn))
    ]
    positions = [(s, f) for s in servers for f in sorted(vsize)]
    weight = {p: 1 << (len(positions) - 1 - k) for k, p in enumerate(positions)}
    mcost = {(s, f): sc.migration_cost(s, f) for s, f in positions}
    widest = {s: _widest(sc, s) for s in servers}

    def reachable(s, it):
        b = widest[s].get(it.client)
        return it.client in widest[s] and (b is None or b >= it.demand)

    # static candidate servers per item (stream capacity and a wide enough path)
    static = [[s for s in servers if spec[s].stream_capacity >= it.demand and spec[s].storage_capacity >= it.size
               and reachable(s, it)] for it in items]
    for it, cands in zip(items, static):
        if not cands:
            raise Infeasible(f"no server can serve client {it.client} vcdn {it.vcdn}")

    cost_grid = math.lcm(*(Fraction(c).denominator for c in mcost.values()))
    stream_res = {s: spec[s].stream_capacity for s in servers}
    store_res = {s: spec[s].storage_capacity for s in servers}
    placed_count: dict[tuple[int, int], int] = {}
    router = Router(sc, deadline=deadline)
    assign: list[int] = []
    witness: list = []  # paths of assigned items, parallel to ``assign``
    residual = dict(router.cap)
    best = {"key": None, "assign": None, "paths": None}
    nodes = 0
    state = {"cost": 0, "bits": 0, "residual": residual}

    def bound(i):
        """Cost so far plus the LP relaxation of the remaining subproblem.

        Remaining demands get fractional server shares and new copies a
        fractional x, under the residual stream and storage capacities. The LP
        value is rounded up onto the grid of achievable costs (minus a margin) with a safety
        margin, so the bound stays valid despite floating point.
        """
        pair_col: dict[tuple[int, int], int] = {}
        costs: list[float] = []
        eq_rows, ub_rows, ub_rhs = [], [], []
        stream_rows: dict[int, list] = {}
        for k in range(i, len(items)):
            it = items[k]
            row = []
            for s in static[k]:
                if stream_res[s] < it.demand:
                    continue
                pair = (s, it.vcdn)
                new = pair not in placed_count
                if new:
                    if store_res[s] < it.size:
                        continue
                    if pair not in pair_col:
                        pair_col[pair] = len(costs)
                        costs.append(float(mcost[pair]))
                col = len(costs)
                costs.append(0.0)
                row.append(col)
                if new:
                    ub_rows.append(((col, 1.0), (pair_col[pair], -1.0)))
                    ub_rhs.append(0.0)
                stream_rows.setdefault(s, []).append((col, float(it.demand)))
            if not row:
                return None
            eq_rows.append(row)
        if not eq_rows:
            return state["cost"]
        for s, entries in stream_rows.items():
            ub_rows.append(tuple(entries))
            ub_rhs.append(float(stream_res[s]))
        store_rows: dict[int, list] = {}
        for (s, f), col in pair_col.items():
            store_rows.setdefault(s, []).append((col, float(vsize[f])))
        for s, entries in store_rows.items():
            ub_rows.append(tuple(entries))
            ub_rhs.append(float(store_res[s]))
        value = _solve_lp(costs, eq_rows, ub_rows, ub_rhs)
        if value is None:
            return None
        return state["cost"] + _round_up_to_grid(value, cost_grid)

    def dominated(lb, bits):
        key = best["key"]
        return key is not None and (lb, bits) >= key

    def search(i, parent_lb):
        nonlocal nodes
        nodes += 1
        if node_budget is not None and nodes > node_budget:
            raise _OutOfSteps
        if deadline is not None and time.monotonic() > deadline:
            raise _OutOfSteps
        if i == len(items):
            key = (state["cost"], state["bits"])
            if best["key"] is None or key < best["key"]:
                best["key"] = key
                log.debug("incumbent cost %s after %d nodes", key[0], nodes)
                best["assign"] = list(assign)
                best["paths"] = [list(p) for p in witness]
            return
        lb = bound(i)
        if lb is None:
            return
        lb = max(lb, parent_lb)  # a subtree never beats its parent's bound
        if dominated(lb, state["bits"]):
            return
        it = items[i]
        options = []
        for s in static[i]:
            if stream_res[s] < it.demand:
                continue
            pair = (s, it.vcdn)
            if pair in placed_count:
                options.append((0, 0, s))
            elif store_res[s] >= it.size:
                options.append((mcost[pair], weight[pair], s))
        options.sort()
        for inc, w, s in options:
            pair = (s, it.vcdn)
            new = pair not in placed_count
            if new and dominated(max(lb, state["cost"] + inc), state["bits"] | w):
                continue
            saved_residual = state["residual"]
            saved_witness = list(witness)
            path = next(router.paths(s, it.client, it.demand, saved_residual), None)
            if path is not None:
                res = dict(saved_residual)
                for a in path:
                    res[a] -= it.demand
                witness.append(path)
            else:
                routed = router.route(
                    [(assign[k], items[k].client, items[k].demand) for k in range(i)]
                    + [(s, it.client, it.demand)]
                )
                if routed is None:
                    continue
                paths, res = routed
                witness[:] = paths
            stream_res[s] -= it.demand
            if new:
                store_res[s] -= it.size
                placed_count[pair] = 0
                state["cost"] += inc
                state["bits"] |= w
            placed_count[pair] += 1
            state["residual"] = res
            assign.append(s)

            search(i + 1, lb)

            assign.pop()
            state["residual"] = saved_residual
            witness[:] = saved_witness
            placed_count[pair] -= 1
            if placed_count[pair] == 0:
                del placed_count[pair]
                store_res[s] += it.size
                state["cost"] -= inc
                state["bits"] &= ~w
            stream_res[s] += it.demand

    by_client: dict[int, list] = {}
    for it in items:
        by_client.setdefault(it.client, []).append(it.demand)
    try:
        for v, ds in sorted(by_client.items()):
            if not router._pack(ds, [router.cap[(u, v)] for u in router.into[v]]):
                raise Infeasible(f"demands of client {v} cannot share its incoming links")
    except _OutOfSteps:
        raise BudgetExceeded("budget exhausted in the client link check") from None

    root_lb = bound(0)
    log.debug("root lower bound %s over %d demands", root_lb, len(items))
    if root_lb is None:
        raise Infeasible("some demand has no server with enough stream and storage capacity")
    try:
        search(0, root_lb)
    except (_OutOfSteps, RecursionError):
        incumbent = None if best["key"] is None else _build(sc, items, best["assign"], best["paths"])
        raise BudgetExceeded(
            f"budget exhausted after {nodes} nodes", incumbent=incumbent, lower_bound=root_lb
        ) from None
    if best["key"] is None:
        raise Infeasible("no assignment satisfies capacity and routing constraints")
    return _build(sc, items, best["assign"], best["paths"])


def _build(sc: Scenario, items, assign, paths) -> PlacementSolution:
    x = frozenset((s, it.vcdn) for s, it in zip(assign, items))
    y = frozenset((s, it.client, it.vcdn) for s, it in zip(assign, items))
    z = {(it.client, it.vcdn): tuple(p) for it, p in zip(items, paths)}
    origin = {f.id: f.origin for f in sc.vcdns}
    mig = {(s, f): migration_path(sc, origin[f], s) for s, f in sorted(x)}
    sol = PlacementSolution("opac", x, y, z, 0, mig)
    sol.objective = objective_value(sc, sol)
    return sol
