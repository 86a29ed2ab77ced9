"""Gomory-Hu tree construction by repeated minimum Steiner cuts.

The construction keeps a tree over *super-nodes* (disjoint node sets). A FIFO
queue holds the super-nodes that still contain two or more graph nodes. Each
step pulls one super-node ``S``, contracts every component of the tree hanging
off ``S`` into a single node, splits ``S`` with a minimum Steiner cut of that
contracted graph and reattaches each neighbouring component to the side of
the cut it fell on.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .flow import FlowGraph, min_steiner_cut, relabel
from .model import Number, Scenario


@dataclass(frozen=True)
class TreeEdge:
    a: int
    b: int
    capacity: Number


@dataclass
class GomoryHuTree:
    nodes: tuple
    edges: tuple[TreeEdge, ...]
    steiner_cuts: int = 0
    _adj: dict = field(init=False, repr=False)

    def __post_init__(self):
        self._adj = {n: {} for n in self.nodes}
        for e in self.edges:
            self._adj[e.a][e.b] = e.capacity
            self._adj[e.b][e.a] = e.capacity

    def neighbors(self, n) -> dict:
        return self._adj[n]

    def capacity(self, a, b) -> Number:
        return self._adj[a][b]

    def __contains__(self, n) -> bool:
        return n in self._adj

    def path_nodes(self, a, b) -> list:
        if a not in self._adj or b not in self._adj:
            raise KeyError(f"node {a if a not in self._adj else b!r} not in tree")
        parent = {a: None}
        queue = deque([a])
        while queue:
            u = queue.popleft()
            if u == b:
                break
            for w in self._adj[u]:
                if w not in parent:
                    parent[w] = u
                    queue.append(w)
        if b not in parent:
            raise ValueError(f"{a!r} and {b!r} are not connected")
        path = [b]
        while path[-1] != a:
            path.append(parent[path[-1]])
        return path[::-1]


def gomory_hu(g: FlowGraph) -> GomoryHuTree:
    if len(g) == 0:
        raise ValueError("empty graph")
    if not g.is_connected():
        raise ValueError("graph is not connected")

    members: dict[int, frozenset] = {0: frozenset(g.nodes)}
    tree_adj: dict[int, dict[int, Number]] = {0: {}}
    next_id = 1
    queue = deque([0] if len(members[0]) > 1 else [])
    cuts = 0

    while queue:
        sid = queue.popleft()
        S = members[sid]
        # Contract the component behind each tree neighbour of S.
        comp_label = {}
        mapping = {}
        for nb in sorted(tree_adj[sid]):
            comp = _component(tree_adj, members, nb, sid)
            label = min(comp)
            comp_label[nb] = label
            mapping.update((n, label) for n in comp)
        work = relabel(g, mapping)
        side1, _, lam = min_steiner_cut(work, S)
        cuts += 1
        s1 = frozenset(n for n in S if n in side1)
        s2 = S - s1

        id1, id2 = next_id, next_id + 1
        next_id += 2
        members[id1], members[id2] = s1, s2
        tree_adj[id1], tree_adj[id2] = {}, {}
        for nb, w in tree_adj.pop(sid).items():
            del tree_adj[nb][sid]
            target = id1 if comp_label[nb] in side1 else id2
            tree_adj[target][nb] = w
            tree_adj[nb][target] = w
        tree_adj[id1][id2] = lam
        tree_adj[id2][id1] = lam
        del members[sid]
        for part in (id1, id2):
            if len(members[part]) > 1:
                queue.append(part)

    node_of = {sid: next(iter(m)) for sid, m in members.items()}
    edges = []
    for sid, nbrs in tree_adj.items():
        for nb, w in nbrs.items():
            a, b = node_of[sid], node_of[nb]
            if a < b:
                edges.append(TreeEdge(a, b, w))
    edges.sort(key=lambda e: (e.a, e.b))
    return GomoryHuTree(tuple(g.nodes), tuple(edges), cuts)


def _component(tree_adj, members, start, blocked) -> set:
    """Graph nodes in the tree component containing ``start`` once ``blocked`` is removed."""
    seen = {start, blocked}
    stack = [start]
    nodes = set()
    while stack:
        u = stack.pop()
        nodes |= members[u]
        for w in tree_adj[u]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return nodes


def tree_path(t: GomoryHuTree, a, b) -> list[TreeEdge]:
    """Unique a-b path as oriented edges (``a`` side first) with capacities."""
    if a == b:
        raise ValueError("path endpoints must differ")
    nodes = t.path_nodes(a, b)
    return [TreeEdge(u, v, t.capacity(u, v)) for u, v in zip(nodes, nodes[1:])]


def tree_min_cut(t: GomoryHuTree, a, b) -> Number:
    return min(e.capacity for e in tree_path(t, a, b))


def scenario_flow_graph(sc: Scenario) -> FlowGraph:
    """Undirected view of a scenario's links.

    Each node pair gets the smaller of its two directed capacities (a missing
    direction counts as 0), so a symmetric link pair of capacity c becomes one
    undirected edge of capacity c.
    """
    cap = sc.capacity
    g = FlowGraph(sc.nodes)
    for (i, j), c in cap.items():
        if (j, i) in cap and i < j:
            g.add_edge(i, j, min(c, cap[(j, i)]))
        elif (j, i) not in cap:
            g.add_edge(i, j, 0)
    return g


def write_edgelist(t: GomoryHuTree, path) -> None:
    """One ``a b capacity`` line per tree edge."""
    with open(path, "w") as fh:
        for e in t.edges:
            fh.write(f"{e.a} {e.b} {e.capacity}\n")
