"""Exact max-flow / min-cut, node contraction and minimum Steiner cuts.

Capacities are ints or Fractions; no floating point is involved, so the
returned flow value and cut capacity are equal bit for bit.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Hashable, Iterable

from .model import Number


class FlowGraph:
    """Directed capacitated graph; undirected edges are stored both ways."""

    def __init__(self, nodes: Iterable[Hashable] = ()):
        self._adj: dict = {}
        for n in nodes:
            self.add_node(n)

    @classmethod
    def from_edges(cls, edges, nodes=(), directed: bool = False) -> FlowGraph:
        g = cls(nodes)
        for u, v, c in edges:
            if directed:
                g.add_arc(u, v, c)
            else:
                g.add_edge(u, v, c)
        return g

    def add_node(self, n) -> None:
        self._adj.setdefault(n, {})

    def add_arc(self, u, v, capacity: Number) -> None:
        if capacity < 0:
            raise ValueError("capacity must be nonnegative")
        if u == v:
            return
        self.add_node(u)
        self.add_node(v)
        self._adj[u][v] = self._adj[u].get(v, 0) + capacity

    def add_edge(self, u, v, capacity: Number) -> None:
        self.add_arc(u, v, capacity)
        self.add_arc(v, u, capacity)

    @property
    def nodes(self) -> list:
        return list(self._adj)

    def __contains__(self, n) -> bool:
        return n in self._adj

    def __len__(self) -> int:
        return len(self._adj)

    def capacity(self, u, v) -> Number:
        return self._adj.get(u, {}).get(v, 0)

    def arcs(self):
        for u, nbrs in self._adj.items():
            for v, c in nbrs.items():
                yield u, v, c

    def undirected_edges(self):
        """(u, v, c) per unordered pair, u listed first in insertion order."""
        seen = set()
        for u, v, c in self.arcs():
            key = frozenset((u, v))
            if key not in seen:
                seen.add(key)
                yield u, v, c

    def cut_capacity(self, side) -> Number:
        side = set(side)
        return sum(c for u in side for v, c in self._adj[u].items() if v not in side)

    def is_connected(self) -> bool:
        """Structural connectivity; zero-capacity arcs still connect."""
        if not self._adj:
            return True
        start = next(iter(self._adj))
        nb: dict = {n: set() for n in self._adj}
        for u, v, _ in self.arcs():
            nb[u].add(v)
            nb[v].add(u)
        seen = {start}
        stack = [start]
        while stack:
            u = stack.pop()
            for w in nb[u]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == len(self._adj)


@dataclass(frozen=True)
class Cut:
    side_a: frozenset
    side_b: frozenset
    capacity: Number


class _Arcs:
    """Arc arrays of a graph: arc k and its reverse k ^ 1."""

    def __init__(self, g: FlowGraph):
        self.names = list(g._adj)
        self.index = {n: i for i, n in enumerate(self.names)}
        self.head: list[int] = []
        self.cap: list = []
        self.out: list[list[int]] = [[] for _ in self.names]
        for u, nbrs in g._adj.items():
            iu = self.index[u]
            for v, c in nbrs.items():
                iv = self.index[v]
                self.out[iu].append(len(self.head))
                self.head.append(iv)
                self.cap.append(c)
                self.out[iv].append(len(self.head))
                self.head.append(iu)
                self.cap.append(0)


def _dinic(arcs: _Arcs, src: int, dst: int, limit=None):
    """Max-flow value and residual capacities; stops early once ``limit`` is reached."""
    head, out = arcs.head, arcs.out
    cap = list(arcs.cap)
    n = len(out)
    value = 0
    while limit is None or value < limit:
        level = [-1] * n
        level[src] = 0
        queue = deque([src])
        while queue and level[dst] < 0:
            u = queue.popleft()
            lu = level[u] + 1
            for k in out[u]:
                v = head[k]
                if level[v] < 0 and cap[k] > 0:
                    level[v] = lu
                    queue.append(v)
        if level[dst] < 0:
            break
        it = [0] * n
        while limit is None or value < limit:
            # iterative DFS for one augmenting path in the level graph
            stack = [src]
            path: list[int] = []
            while stack:
                u = stack[-1]
                if u == dst:
                    break
                lst = out[u]
                i = it[u]
                want = level[u] + 1
                while i < len(lst):
                    k = lst[i]
                    if cap[k] > 0 and level[head[k]] == want:
                        break
                    i += 1
                it[u] = i
                if i < len(lst):
                    stack.append(head[lst[i]])
                    path.append(lst[i])
                else:
                    stack.pop()
                    if path:
                        path.pop()
                        it[stack[-1]] += 1
            if not stack:
                break
            pushed = min(cap[k] for k in path)
            for k in path:
                cap[k] -= pushed
                cap[k ^ 1] += pushed
            value += pushed
    return value, cap


def _reachable(arcs: _Arcs, cap, src: int) -> frozenset:
    reach = [False] * len(arcs.out)
    reach[src] = True
    queue = deque([src])
    while queue:
        u = queue.popleft()
        for k in arcs.out[u]:
            v = arcs.head[k]
            if not reach[v] and cap[k] > 0:
                reach[v] = True
                queue.append(v)
    return frozenset(arcs.names[i] for i, r in enumerate(reach) if r)


def _cut(g: FlowGraph, side_a: frozenset) -> Cut:
    return Cut(side_a, frozenset(g._adj) - side_a, g.cut_capacity(side_a))


def max_flow(g: FlowGraph, s, t) -> tuple[Number, Cut]:
    """Dinic's algorithm. ``side_a`` of the cut is the residual-reachable set of ``s``."""
    if s not in g or t not in g:
        raise KeyError(f"source {s!r} or sink {t!r} not in graph")
    if s == t:
        raise ValueError("source and sink must differ")
    arcs = _Arcs(g)
    src = arcs.index[s]
    value, cap = _dinic(arcs, src, arcs.index[t])
    return value, _cut(g, _reachable(arcs, cap, src))


def contract(g: FlowGraph, group, label=None) -> FlowGraph:
    """Merge ``group`` into one node (``label``, default ``min(group)``).

    Parallel arcs are summed and arcs inside the group dropped.
    """
    group = set(group)
    if not group:
        raise ValueError("cannot contract an empty node set")
    missing = group - set(g.nodes)
    if missing:
        raise KeyError(f"nodes {sorted(missing)} not in graph")
    if label is None:
        label = min(group)
    return relabel(g, {n: label for n in group})


def relabel(g: FlowGraph, mapping: dict) -> FlowGraph:
    """Rename nodes through ``mapping`` (missing keys keep their name), merging collisions."""
    out = FlowGraph()
    for n in g._adj:
        out.add_node(mapping.get(n, n))
    adj = out._adj
    for u, nbrs in g._adj.items():
        u2 = mapping.get(u, u)
        row = adj[u2]
        for v, c in nbrs.items():
            v2 = mapping.get(v, v)
            if u2 != v2:
                row[v2] = row.get(v2, 0) + c
    return out


def min_steiner_cut(g: FlowGraph, steiner) -> tuple[frozenset, frozenset, Number]:
    """Cheapest cut splitting ``steiner`` into two nonempty parts.

    Runs one max-flow from the smallest terminal to each other terminal and
    keeps the first minimum in sorted order. Returns both full sides of the
    node partition (the first contains the smallest terminal) and the capacity.
    """
    terminals = sorted(set(steiner))
    if len(terminals) < 2:
        raise ValueError("a Steiner cut needs at least two terminals")
    for n in terminals:
        if n not in g:
            raise KeyError(f"terminal {n!r} not in graph")
    arcs = _Arcs(g)
    root = arcs.index[terminals[0]]
    best_value, best_side = None, None
    for t in terminals[1:]:
        # only a strictly smaller cut can replace the incumbent, so stop at it
        value, cap = _dinic(arcs, root, arcs.index[t], best_value)
        if best_value is None or value < best_value:
            best_value, best_side = value, _reachable(arcs, cap, root)
    cut = _cut(g, best_side)
    return cut.side_a, cut.side_b, cut.capacity
