"""Problem instances for vCDN placement/migration.

A :class:`Scenario` bundles the operator graph (directed, capacitated links),
the server and client-group roles of its nodes, the vCDN catalog with each
vCDN's origin server, the demand matrix and the migration-cost policy.

Numbers are kept exact: JSON integers stay ``int``, JSON decimals are parsed
into :class:`fractions.Fraction`.
"""

from __future__ import annotations

import json
import random
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from importlib.resources import files
from numbers import Rational
from typing import Iterable

Number = int | Fraction

HOP_DISTANCE = "hop-distance-times-size"
EXPLICIT_MATRIX = "explicit-matrix"


class ScenarioError(ValueError):
    """Raised when a scenario document or object violates the schema."""


@dataclass(frozen=True)
class Link:
    src: int
    dst: int
    capacity: Number


@dataclass(frozen=True)
class ServerSpec:
    node: int
    storage_capacity: Number  # GB
    stream_capacity: Number  # Mbps


@dataclass(frozen=True)
class Vcdn:
    id: int
    size: Number  # GB
    origin: int


@dataclass(frozen=True)
class Demand:
    client: int
    vcdn: int
    throughput: Number  # Mbps


@dataclass(frozen=True)
class MigrationCostPolicy:
    mode: str = HOP_DISTANCE
    explicit: tuple[tuple[int, int, Number], ...] = ()

    def as_dict(self) -> dict[tuple[int, int], Number]:
        return {(s, f): c for s, f, c in self.explicit}


@dataclass(frozen=True)
class Scenario:
    nodes: tuple[int, ...]
    links: tuple[Link, ...]
    servers: tuple[ServerSpec, ...]
    client_groups: tuple[int, ...]
    vcdns: tuple[Vcdn, ...]
    demands: tuple[Demand, ...]
    cost_policy: MigrationCostPolicy = field(default_factory=MigrationCostPolicy)
    name: str = "scenario"

    def __post_init__(self):
        _validate(self)

    # -- lookups -------------------------------------------------------
    @cached_property
    def server_ids(self) -> tuple[int, ...]:
        return tuple(s.node for s in self.servers)

    @cached_property
    def server_map(self) -> dict[int, ServerSpec]:
        return {s.node: s for s in self.servers}

    @cached_property
    def vcdn_map(self) -> dict[int, Vcdn]:
        return {f.id: f for f in self.vcdns}

    @cached_property
    def capacity(self) -> dict[tuple[int, int], Number]:
        return {(l.src, l.dst): l.capacity for l in self.links}

    @cached_property
    def out_links(self) -> dict[int, list[tuple[int, Number]]]:
        out: dict[int, list[tuple[int, Number]]] = {n: [] for n in self.nodes}
        for l in self.links:
            out[l.src].append((l.dst, l.capacity))
        return out

    @cached_property
    def undirected_neighbors(self) -> dict[int, list[int]]:
        nb: dict[int, set[int]] = {n: set() for n in self.nodes}
        for l in self.links:
            nb[l.src].add(l.dst)
            nb[l.dst].add(l.src)
        return {n: sorted(v) for n, v in nb.items()}

    @property
    def active_demands(self) -> list[Demand]:
        return [d for d in self.demands if d.throughput > 0]

    def hops_from(self, source: int) -> dict[int, int]:
        return self._hops[source] if source in self._hops else self._bfs(source)

    def hop_distance(self, a: int, b: int) -> int:
        return self.hops_from(a)[b]

    @cached_property
    def _hops(self) -> dict[int, dict[int, int]]:
        return {f.origin: self._bfs(f.origin) for f in self.vcdns}

    def _bfs(self, source: int) -> dict[int, int]:
        dist = {source: 0}
        queue = deque([source])
        nb = self.undirected_neighbors
        while queue:
            u = queue.popleft()
            for w in nb[u]:
                if w not in dist:
                    dist[w] = dist[u] + 1
                    queue.append(w)
        return dist

    def attachment_server(self, client: int) -> int:
        """Server closest to ``client`` in hops, smallest id on ties."""
        dist = self.hops_from(client)
        return min((dist[s], s) for s in self.server_ids if s in dist)[1]

    def migration_cost(self, server: int, vcdn: int) -> Number:
        """Cost of hosting ``vcdn`` on ``server`` (zero at the origin)."""
        f = self.vcdn_map[vcdn]
        if server == f.origin:
            return 0
        if self.cost_policy.mode == EXPLICIT_MATRIX:
            return self._explicit_costs[(server, vcdn)]
        return f.size * self.hop_distance(f.origin, server)

    @cached_property
    def _explicit_costs(self) -> dict[tuple[int, int], Number]:
        return self.cost_policy.as_dict()

    def restrict_vcdns(self, count: int) -> Scenario:
        """Keep the first ``count`` vCDNs (by id) and their demands."""
        keep = sorted(f.id for f in self.vcdns)[:count]
        if len(keep) < count:
            raise ScenarioError(f"scenario has only {len(keep)} vcdns, asked for {count}")
        kept = set(keep)
        policy = self.cost_policy
        if policy.mode == EXPLICIT_MATRIX:
            policy = MigrationCostPolicy(
                EXPLICIT_MATRIX, tuple(e for e in policy.explicit if e[1] in kept)
            )
        return Scenario(
            nodes=self.nodes,
            links=self.links,
            servers=self.servers,
            client_groups=self.client_groups,
            vcdns=tuple(f for f in self.vcdns if f.id in kept),
            demands=tuple(d for d in self.demands if d.vcdn in kept),
            cost_policy=policy,
            name=self.name,
        )


def _is_number(x) -> bool:
    return isinstance(x, Rational) and not isinstance(x, bool)


def _validate(sc: Scenario) -> None:
    nodes = set(sc.nodes)
    if len(nodes) != len(sc.nodes):
        raise ScenarioError("nodes: duplicate node id")
    if not nodes:
        raise ScenarioError("nodes: empty graph")
    seen = set()
    for l in sc.links:
        if l.src not in nodes or l.dst not in nodes:
            raise ScenarioError(f"links: unknown endpoint in {l.src}->{l.dst}")
        if l.src == l.dst:
            raise ScenarioError(f"links: self-loop at {l.src}")
        if (l.src, l.dst) in seen:
            raise ScenarioError(f"links: duplicate link {l.src}->{l.dst}")
        if not _is_number(l.capacity) or l.capacity < 0:
            raise ScenarioError(f"links: capacity of {l.src}->{l.dst} must be a nonnegative number")
        seen.add((l.src, l.dst))

    servers = [s.node for s in sc.servers]
    clients = list(sc.client_groups)
    if len(set(servers)) != len(servers):
        raise ScenarioError("servers: duplicate server node")
    if len(set(clients)) != len(clients):
        raise ScenarioError("client_groups: duplicate client node")
    if set(servers) & set(clients):
        raise ScenarioError("servers/client_groups: a node cannot be both")
    unclassified = nodes - set(servers) - set(clients)
    if unclassified:
        raise ScenarioError(f"nodes: {sorted(unclassified)} are neither server nor client group")
    for s in sc.servers:
        if s.node not in nodes:
            raise ScenarioError(f"servers: unknown node {s.node}")
        for attr in ("storage_capacity", "stream_capacity"):
            v = getattr(s, attr)
            if not _is_number(v) or v < 0:
                raise ScenarioError(f"servers: {attr} of {s.node} must be a nonnegative number")
    for c in clients:
        if c not in nodes:
            raise ScenarioError(f"client_groups: unknown node {c}")

    vids = [f.id for f in sc.vcdns]
    if len(set(vids)) != len(vids):
        raise ScenarioError("vcdns: duplicate id")
    server_set = set(servers)
    for f in sc.vcdns:
        if not _is_number(f.size) or f.size <= 0:
            raise ScenarioError(f"vcdns: size of vcdn {f.id} must be positive")
        if f.origin not in server_set:
            raise ScenarioError(f"vcdns: origin {f.origin} of vcdn {f.id} is not a server")

    pairs = set()
    client_set = set(clients)
    vid_set = set(vids)
    for d in sc.demands:
        if d.client not in client_set:
            raise ScenarioError(f"demands: unknown client group {d.client}")
        if d.vcdn not in vid_set:
            raise ScenarioError(f"demands: unknown vcdn {d.vcdn}")
        if not _is_number(d.throughput) or d.throughput < 0:
            raise ScenarioError(f"demands: throughput of ({d.client}, {d.vcdn}) must be nonnegative")
        if (d.client, d.vcdn) in pairs:
            raise ScenarioError(f"demands: duplicate demand ({d.client}, {d.vcdn})")
        pairs.add((d.client, d.vcdn))

    policy = sc.cost_policy
    if policy.mode not in (HOP_DISTANCE, EXPLICIT_MATRIX):
        raise ScenarioError(f"cost_policy: unknown mode {policy.mode!r}")
    if policy.mode == EXPLICIT_MATRIX:
        table = policy.as_dict()
        for s in servers:
            for f in sc.vcdns:
                if (s, f.id) not in table:
                    raise ScenarioError(f"cost_policy: missing explicit cost for ({s}, {f.id})")
                c = table[(s, f.id)]
                if not _is_number(c) or c < 0:
                    raise ScenarioError(f"cost_policy: cost for ({s}, {f.id}) must be nonnegative")
                if s == f.origin and c != 0:
                    raise ScenarioError(f"cost_policy: origin cost for vcdn {f.id} must be 0")

    if not _connected(sc.nodes, sc.links):
        raise ScenarioError("links: graph is not connected")


def _connected(nodes: Iterable[int], links: Iterable[Link]) -> bool:
    nodes = list(nodes)
    nb: dict[int, list[int]] = {n: [] for n in nodes}
    for l in links:
        nb[l.src].append(l.dst)
        nb[l.dst].append(l.src)
    seen = {nodes[0]}
    stack = [nodes[0]]
    while stack:
        u = stack.pop()
        for w in nb[u]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == len(nodes)


# -- JSON I/O -------------------------------------------------------------

_TOP_KEYS = {"nodes", "links", "servers", "client_groups", "vcdns", "demands", "cost_policy"}
_SCHEMA = {
    "links": {"from", "to", "capacity"},
    "servers": {"node", "storage_capacity", "stream_capacity"},
    "vcdns": {"id", "size", "origin"},
    "demands": {"client", "vcdn", "throughput"},
}


def _check_keys(obj, expected: set[str], where: str, optional: set[str] = frozenset()) -> None:
    if not isinstance(obj, dict):
        raise ScenarioError(f"{where}: expected an object")
    missing = expected - obj.keys()
    if missing:
        raise ScenarioError(f"{where}: missing field {sorted(missing)[0]!r}")
    extra = obj.keys() - expected - optional
    if extra:
        raise ScenarioError(f"{where}: unknown field {sorted(extra)[0]!r}")


def _int(v, where: str) -> int:
    if not isinstance(v, int) or isinstance(v, bool):
        raise ScenarioError(f"{where}: expected an integer node/vcdn id")
    return v


def _num(v, where: str) -> Number:
    if not _is_number(v):
        raise ScenarioError(f"{where}: expected a number")
    if isinstance(v, Fraction) and v.denominator == 1:
        return int(v)
    return v


def parse_scenario(text: str) -> Scenario:
    """Parse and validate a scenario JSON document."""
    try:
        doc = json.loads(text, parse_float=Fraction)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON: {exc}") from None
    _check_keys(doc, _TOP_KEYS, "scenario", optional={"name"})
    for key in ("nodes", "links", "servers", "client_groups", "vcdns", "demands"):
        if not isinstance(doc[key], list):
            raise ScenarioError(f"{key}: expected a list")
    for key, fields in _SCHEMA.items():
        for i, item in enumerate(doc[key]):
            _check_keys(item, fields, f"{key}[{i}]")

    links = tuple(
        Link(_int(l["from"], "links.from"), _int(l["to"], "links.to"), _num(l["capacity"], "links.capacity"))
        for l in doc["links"]
    )
    servers = tuple(
        ServerSpec(
            _int(s["node"], "servers.node"),
            _num(s["storage_capacity"], "servers.storage_capacity"),
            _num(s["stream_capacity"], "servers.stream_capacity"),
        )
        for s in doc["servers"]
    )
    vcdns = tuple(
        Vcdn(_int(f["id"], "vcdns.id"), _num(f["size"], "vcdns.size"), _int(f["origin"], "vcdns.origin"))
        for f in doc["vcdns"]
    )
    demands = tuple(
        Demand(_int(d["client"], "demands.client"), _int(d["vcdn"], "demands.vcdn"),
               _num(d["throughput"], "demands.throughput"))
        for d in doc["demands"]
    )
    cp = doc["cost_policy"]
    _check_keys(cp, {"mode"}, "cost_policy", optional={"explicit"})
    explicit = ()
    if "explicit" in cp:
        if not isinstance(cp["explicit"], list):
            raise ScenarioError("cost_policy.explicit: expected a list")
        for i, e in enumerate(cp["explicit"]):
            _check_keys(e, {"server", "vcdn", "cost"}, f"cost_policy.explicit[{i}]")
        explicit = tuple(
            (_int(e["server"], "cost_policy.explicit.server"), _int(e["vcdn"], "cost_policy.explicit.vcdn"),
             _num(e["cost"], "cost_policy.explicit.cost"))
            for e in cp["explicit"]
        )
    name = doc.get("name", "scenario")
    if not isinstance(name, str):
        raise ScenarioError("name: expected a string")
    return Scenario(
        nodes=tuple(_int(n, "nodes") for n in doc["nodes"]),
        links=links,
        servers=servers,
        client_groups=tuple(_int(c, "client_groups") for c in doc["client_groups"]),
        vcdns=vcdns,
        demands=demands,
        cost_policy=MigrationCostPolicy(cp["mode"], explicit),
        name=name,
    )


def load_scenario(path) -> Scenario:
    with open(path) as fh:
        return parse_scenario(fh.read())


def to_json_number(x: Number):
    """Exact JSON representation of ``x``; rejects non-terminating decimals."""
    if isinstance(x, int):
        return x
    x = Fraction(x)
    if x.denominator == 1:
        return int(x.numerator)
    as_float = float(x)
    if Fraction(repr(as_float)) != x:
        raise ScenarioError(f"{x} has no exact short decimal form")
    return as_float


def scenario_to_dict(sc: Scenario) -> dict:
    doc = {
        "name": sc.name,
        "nodes": list(sc.nodes),
        "links": [{"from": l.src, "to": l.dst, "capacity": to_json_number(l.capacity)} for l in sc.links],
        "servers": [
            {"node": s.node, "storage_capacity": to_json_number(s.storage_capacity),
             "stream_capacity": to_json_number(s.stream_capacity)}
            for s in sc.servers
        ],
        "client_groups": list(sc.client_groups),
        "vcdns": [{"id": f.id, "size": to_json_number(f.size), "origin": f.origin} for f in sc.vcdns],
        "demands": [
            {"client": d.client, "vcdn": d.vcdn, "throughput": to_json_number(d.throughput)}
            for d in sc.demands
        ],
        "cost_policy": {"mode": sc.cost_policy.mode},
    }
    if sc.cost_policy.mode == EXPLICIT_MATRIX:
        doc["cost_policy"]["explicit"] = [
            {"server": s, "vcdn": f, "cost": to_json_number(c)} for s, f, c in sc.cost_policy.explicit
        ]
    return doc


def serialize_scenario(sc: Scenario) -> str:
    return json.dumps(scenario_to_dict(sc), indent=1) + "\n"


def validate_solution_inputs(sc: Scenario) -> list[str]:
    """Warnings for instances that cannot possibly be served."""
    warnings = []
    total_demand = sum(d.throughput for d in sc.demands)
    total_stream = sum(s.stream_capacity for s in sc.servers)
    if total_demand > total_stream:
        warnings.append(f"total demand {total_demand} Mbps exceeds total stream capacity {total_stream} Mbps")
    best = max((s.stream_capacity for s in sc.servers), default=0)
    for d in sc.demands:
        if d.throughput > best:
            warnings.append(
                f"demand unsatisfiable: client {d.client} needs {d.throughput} Mbps of vcdn {d.vcdn}, "
                f"every server streams at most {best} Mbps"
            )
    origin_load: dict[int, Number] = {}
    for f in sc.vcdns:
        origin_load[f.origin] = origin_load.get(f.origin, 0) + f.size
    for node, load in sorted(origin_load.items()):
        if load > sc.server_map[node].storage_capacity:
            warnings.append(f"server {node} stores {load} GB of origin vcdns beyond its {sc.server_map[node].storage_capacity} GB")
    return warnings


# -- generators -------------------------------------------------------------

def _undirected_links(edges: Iterable[tuple[int, int, Number]]) -> tuple[Link, ...]:
    out = []
    for a, b, c in edges:
        out.append(Link(a, b, c))
        out.append(Link(b, a, c))
    return tuple(out)


def _catalog(rng: random.Random, servers: list[int], clients: list[int], n_vcdns: int,
             size_range, demand_range, demand_prob: float, origin_pool: int | None = None):
    # one vcdn at a time so that a catalog of k vcdns is a prefix of one of k+1
    origins = servers if origin_pool is None else sorted(rng.sample(servers, min(origin_pool, len(servers))))
    vcdns, demands = [], []
    for i in range(n_vcdns):
        vcdns.append(Vcdn(i, rng.randint(*size_range), rng.choice(origins)))
        wanted = [c for c in clients if rng.random() < demand_prob]
        if not wanted:
            wanted = [rng.choice(clients)]
        for c in sorted(wanted):
            demands.append(Demand(c, i, rng.randint(*demand_range)))
    demands.sort(key=lambda d: (d.client, d.vcdn))
    return tuple(vcdns), tuple(demands)


def gen_three_tier(
    n_access: int = 10,
    n_aggregate: int = 6,
    n_core: int = 4,
    seed: int = 0,
    cap_range: tuple[int, int] = (50, 200),
    *,
    n_vcdns: int = 10,
    size_range: tuple[int, int] = (2, 8),
    storage_range: tuple[int, int] = (100, 200),
    stream_range: tuple[int, int] = (100, 300),
    demand_range: tuple[int, int] = (5, 40),
    demand_prob: float = 0.2,
) -> Scenario:
    """Layered access/aggregate/core topology.

    Access nodes are client groups, each wired to one aggregate node (round
    robin) plus, when possible, a second random one. Aggregate and core nodes
    are servers; every aggregate node links to every core node and the core
    forms a ring. All capacity draws are uniform integers from the given
    ranges, which are documented defaults and not measured values.
    """
    if min(n_access, n_aggregate, n_core) < 1:
        raise ValueError("tier sizes must be >= 1")
    rng = random.Random(seed)
    access = list(range(n_access))
    aggregate = list(range(n_access, n_access + n_aggregate))
    core = list(range(n_access + n_aggregate, n_access + n_aggregate + n_core))
    edges = []
    for i, a in enumerate(access):
        first = aggregate[i % n_aggregate]
        edges.append((a, first, rng.randint(*cap_range)))
        if n_aggregate > 1 and rng.random() < 0.5:
            second = rng.choice([g for g in aggregate if g != first])
            edges.append((a, second, rng.randint(*cap_range)))
    for g in aggregate:
        for c in core:
            edges.append((g, c, rng.randint(*cap_range)))
    if n_core > 2:
        for i, c in enumerate(core):
            edges.append((c, core[(i + 1) % n_core], rng.randint(*cap_range)))
    elif n_core == 2:
        edges.append((core[0], core[1], rng.randint(*cap_range)))

    servers = aggregate + core
    server_specs = tuple(
        ServerSpec(s, rng.randint(*storage_range), rng.randint(*stream_range)) for s in servers
    )
    vcdns, demands = _catalog(rng, servers, access, n_vcdns, size_range, demand_range, demand_prob)
    return Scenario(
        nodes=tuple(access + aggregate + core),
        links=_undirected_links(edges),
        servers=server_specs,
        client_groups=tuple(access),
        vcdns=vcdns,
        demands=demands,
        name=f"three-tier-{n_access}-{n_aggregate}-{n_core}-s{seed}",
    )


def erdos_renyi_edges(n: int, m: int, rng: random.Random, max_attempts: int = 1000) -> list[tuple[int, int]]:
    """Connected G(n, m): sample m distinct pairs, resample until connected."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not (n - 1 <= m <= n * (n - 1) // 2):
        raise ValueError(f"edge count m={m} out of range [{n - 1}, {n * (n - 1) // 2}] for n={n}")
    pairs = [(a, b) for a in range(n) for b in range(a + 1, n)]
    nodes = tuple(range(n))
    for _ in range(max_attempts):
        edges = sorted(rng.sample(pairs, m))
        if _connected(nodes, [Link(a, b, 1) for a, b in edges]):
            return edges
    raise ValueError(f"no connected G({n},{m}) sample within {max_attempts} attempts")


def gen_erdos_renyi(
    n: int = 100,
    m: int = 200,
    seed: int = 0,
    cap_range: tuple[int, int] = (100, 400),
    *,
    n_servers: int | None = None,
    n_vcdns: int = 10,
    size_range: tuple[int, int] = (1, 4),
    storage_range: tuple[int, int] = (100, 200),
    stream_range: tuple[int, int] = (300, 600),
    demand_range: tuple[int, int] = (5, 30),
    demand_prob: float = 0.03,
    origin_pool: int | None = 10,
    max_attempts: int = 1000,
) -> Scenario:
    """Connected Erdos-Renyi G(n, m) operator network.

    ``n_servers`` nodes (default ``n // 2``, at least 1) are drawn as servers,
    the rest are client groups; with n == 1 the single node is a server.
    vCDN origins are drawn from ``origin_pool`` servers (None: any server),
    modelling a few origin data centres that replicas fan out from.
    """
    rng = random.Random(seed)
    edges = erdos_renyi_edges(n, m, rng, max_attempts)
    if n_servers is None:
        n_servers = max(1, n // 2)
    if not 1 <= n_servers <= n:
        raise ValueError("n_servers must be in [1, n]")
    servers = sorted(rng.sample(range(n), n_servers))
    clients = [v for v in range(n) if v not in set(servers)]
    weighted = [(a, b, rng.randint(*cap_range)) for a, b in edges]
    server_specs = tuple(
        ServerSpec(s, rng.randint(*storage_range), rng.randint(*stream_range)) for s in servers
    )
    if clients:
        vcdns, demands = _catalog(rng, servers, clients, n_vcdns, size_range, demand_range, demand_prob,
                                  origin_pool)
    else:
        vcdns = tuple(Vcdn(i, rng.randint(*size_range), rng.choice(servers)) for i in range(n_vcdns))
        demands = ()
    return Scenario(
        nodes=tuple(range(n)),
        links=_undirected_links(weighted),
        servers=server_specs,
        client_groups=tuple(clients),
        vcdns=vcdns,
        demands=demands,
        name=f"er-{n}-{m}-s{seed}",
    )


def small_scale_path():
    """Shipped small-scale scenario (three-tier, 11 vCDNs), used as the golden instance."""
    return files("vcdn") / "data" / "small_scale.json"


def load_small_scale() -> Scenario:
    return parse_scenario(small_scale_path().read_text())
