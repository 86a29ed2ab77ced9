"""Gomory-Hu-tree heuristic for vCDN placement and migration.

The operator graph is compressed into its Gomory-Hu tree. Demands are then
handled one at a time, largest throughput first: the unique tree path from
the client to the best current host of the vCDN is explored, and when some
edge of that path (or the host itself) cannot carry the demand, the vCDN is
copied to the rupture node, i.e. the node closest to the host from which the
rest of the path towards the client still has room.

Capacity bookkeeping is done on tree-edge residuals. Tree capacities are
pairwise min-cut values, so they over-approximate what many simultaneous
streams can really use; :func:`vcdn.opac.route_assignment` re-checks an HPAC
assignment on the real links.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .ghtree import GomoryHuTree, TreeEdge, gomory_hu, scenario_flow_graph, tree_path
from .model import Number, Scenario
from .solution import Infeasible, PlacementSolution

MOVE = "move"
REPLICATE = "replicate"


@dataclass
class PathReport:
    path: list[TreeEdge]  # from the client side to the host
    bottleneck: Number
    bottleneck_edge: TreeEdge | None

    @property
    def nodes(self) -> list:
        if not self.path:
            return []
        return [self.path[0].a] + [e.b for e in self.path]


@dataclass
class ResidualState:
    edges: dict[frozenset, Number]
    stream: dict[int, Number]
    storage: dict[int, Number]
    servers: frozenset = field(default_factory=frozenset)

    @classmethod
    def initial(cls, sc: Scenario, tree: GomoryHuTree) -> ResidualState:
        storage = {s.node: s.storage_capacity for s in sc.servers}
        for f in sc.vcdns:
            storage[f.origin] -= f.size
        return cls(
            edges={frozenset((e.a, e.b)): e.capacity for e in tree.edges},
            stream={s.node: s.stream_capacity for s in sc.servers},
            storage=storage,
            servers=frozenset(sc.server_ids),
        )

    def edge(self, e: TreeEdge) -> Number:
        return self.edges[frozenset((e.a, e.b))]

    def can_host(self, node, demand: Number, size: Number, present: bool) -> bool:
        if node not in self.servers or self.stream[node] < demand:
            return False
        return present or self.storage[node] >= size


def explore_path(t: GomoryHuTree, start, host, res: ResidualState | None = None) -> PathReport:
    """Tree path start -> host with its bottleneck (residual if ``res`` given)."""
    path = tree_path(t, start, host)
    caps = [e.capacity if res is None else res.edge(e) for e in path]
    k = min(range(len(caps)), key=caps.__getitem__)
    return PathReport(path, caps[k], path[k])


def find_rupture_node(p: PathReport, demand: Number, res: ResidualState,
                      size: Number = 0, hosts=frozenset()):
    """Node nearest the host end from which the client side of the path fits ``demand``.

    The candidate must be a server with enough residual stream capacity and
    either already hold the vCDN (``hosts``) or have room for ``size``.
    Returns None when no node on the path qualifies.
    """
    nodes = p.nodes
    # fits[k]: every edge between nodes[0] (client) and nodes[k] has room
    fits = [True]
    for e in p.path:
        fits.append(fits[-1] and res.edge(e) >= demand)
    for k in range(len(nodes) - 1, -1, -1):
        u = nodes[k]
        if fits[k] and res.can_host(u, demand, size, u in hosts):
            return u
    return None


def tree_links(t: GomoryHuTree) -> dict[tuple, Number]:
    """Tree edges as symmetric directed links, for auditing tree-routed solutions."""
    links = {}
    for e in t.edges:
        links[(e.a, e.b)] = e.capacity
        links[(e.b, e.a)] = e.capacity
    return links


def hpac_solve(sc: Scenario, mode: str = REPLICATE, tree: GomoryHuTree | None = None) -> PlacementSolution:
    if mode not in (MOVE, REPLICATE):
        raise ValueError(f"mode must be {MOVE!r} or {REPLICATE!r}")
    if tree is None:
        tree = gomory_hu(scenario_flow_graph(sc))
    res = ResidualState.initial(sc, tree)
    vcdn = sc.vcdn_map
    hosts: dict[int, list[int]] = {f.id: [f.origin] for f in sc.vcdns}
    x = {(f.origin, f.id) for f in sc.vcdns}
    y = set()
    z = {}
    serving: dict[tuple[int, int], int] = {}  # (host, vcdn) -> number of demands served

    for d in sorted(sc.active_demands, key=lambda d: (-d.throughput, d.client, d.vcdn)):
        f, v, need = d.vcdn, d.client, d.throughput
        size = vcdn[f].size
        reports = {h: explore_path(tree, v, h, res) for h in hosts[f]}

        def rank(h):
            r = reports[h]
            return (-r.bottleneck, len(r.path), h)

        direct = [h for h in hosts[f] if reports[h].bottleneck >= need and res.stream[h] >= need]
        if direct:
            server = min(direct, key=rank)
        else:
            primary = min(hosts[f], key=rank)
            server = find_rupture_node(reports[primary], need, res, size, set(hosts[f]))
            if server is None:
                server = _attachment_fallback(sc, tree, res, v, need, size, set(hosts[f]))
            if server is None:
                raise Infeasible(f"no tree node can host vcdn {f} for client {v} at {need} Mbps")
            if server not in hosts[f]:
                res.storage[server] -= size
                hosts[f].append(server)
                x.add((server, f))
                if mode == MOVE and serving.get((primary, f), 0) == 0:
                    hosts[f].remove(primary)
                    x.discard((primary, f))
                    res.storage[primary] += size

        path = tree_path(tree, server, v)
        for e in path:
            res.edges[frozenset((e.a, e.b))] -= need
        res.stream[server] -= need
        serving[(server, f)] = serving.get((server, f), 0) + 1
        y.add((server, v, f))
        z[(v, f)] = tuple((e.a, e.b) for e in path)

    # like the exact model, report only copies that serve something; an idle
    # origin copy costs nothing and is left out of x
    x = {p for p in x if serving.get(p, 0) > 0}
    origin = {f.id: f.origin for f in sc.vcdns}
    migration_paths = {
        (s, f): tuple((e.a, e.b, e.capacity) for e in tree_path(tree, origin[f], s)) if s != origin[f] else ()
        for s, f in sorted(x)
    }
    objective = sum((sc.migration_cost(s, f) for s, f in x), 0)
    return PlacementSolution("hpac", frozenset(x), frozenset(y), z, objective, migration_paths)


def _attachment_fallback(sc, tree, res, v, need, size, hosts):
    s_v = sc.attachment_server(v)
    if not res.can_host(s_v, need, size, s_v in hosts):
        return None
    if all(res.edge(e) >= need for e in tree_path(tree, s_v, v)):
        return s_v
    return None
