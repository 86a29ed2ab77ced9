"""Placement solutions, their JSON form and the constraint audit."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

from .model import Number, Scenario, to_json_number


class Infeasible(Exception):
    """No assignment satisfies all constraints."""


class BudgetExceeded(Exception):
    """Search stopped early; ``incumbent`` may be None."""

    def __init__(self, message, incumbent=None, lower_bound=0):
        super().__init__(message)
        self.incumbent = incumbent
        self.lower_bound = lower_bound

    @property
    def gap_bound(self):
        if self.incumbent is None:
            return None
        return self.incumbent.objective - self.lower_bound


@dataclass
class PlacementSolution:
    """Decision variables of one placement.

    ``x`` holds the (server, vcdn) pairs set to 1, ``y`` the (server, client,
    vcdn) triples set to 1 and ``z`` the routing path of every served
    (client, vcdn) pair as a list of directed (i, j) hops. ``migration_paths``
    gives, per placed pair, the (i, j, capacity) hops used to move the vCDN
    there from its origin.
    """

    solver: str
    x: frozenset
    y: frozenset
    z: dict
    objective: Number = 0
    migration_paths: dict = field(default_factory=dict)

    def x_value(self, server: int, vcdn: int) -> int:
        return int((server, vcdn) in self.x)

    def y_value(self, server: int, client: int, vcdn: int) -> int:
        return int((server, client, vcdn) in self.y)

    def server_of(self, client: int, vcdn: int) -> int | None:
        for s, v, f in self.y:
            if v == client and f == vcdn:
                return s
        return None

    def to_dict(self) -> dict:
        return {
            "solver": self.solver,
            "objective": to_json_number(self.objective),
            "x": [{"server": s, "vcdn": f} for s, f in sorted(self.x)],
            "y": [{"server": s, "client": v, "vcdn": f} for s, v, f in sorted(self.y)],
            "z": [
                {"client": v, "vcdn": f, "path": [[i, j] for i, j in path]}
                for (v, f), path in sorted(self.z.items())
            ],
            "migration_paths": [
                {"server": s, "vcdn": f,
                 "path": [[i, j, to_json_number(c)] for i, j, c in path]}
                for (s, f), path in sorted(self.migration_paths.items())
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"

    @classmethod
    def from_dict(cls, doc: dict) -> PlacementSolution:
        def num(v):
            if isinstance(v, float):
                v = Fraction(repr(v))
            return int(v) if isinstance(v, Fraction) and v.denominator == 1 else v

        return cls(
            solver=doc["solver"],
            x=frozenset((e["server"], e["vcdn"]) for e in doc["x"]),
            y=frozenset((e["server"], e["client"], e["vcdn"]) for e in doc["y"]),
            z={(e["client"], e["vcdn"]): tuple((i, j) for i, j in e["path"]) for e in doc["z"]},
            objective=num(doc["objective"]),
            migration_paths={
                (e["server"], e["vcdn"]): tuple((i, j, num(c)) for i, j, c in e["path"])
                for e in doc["migration_paths"]
            },
        )

    @classmethod
    def from_json(cls, text: str) -> PlacementSolution:
        return cls.from_dict(json.loads(text))


FAMILIES = (
    "serve_requires_copy",
    "single_server",
    "stream_capacity",
    "storage_capacity",
    "flow_conservation",
    "link_capacity",
)


@dataclass
class FeasibilityReport:
    violations: dict[str, list]

    def passed(self, family: str) -> bool:
        return not self.violations[family]

    @property
    def failed_families(self) -> set[str]:
        return {f for f in FAMILIES if self.violations[f]}

    @property
    def feasible(self) -> bool:
        return not self.failed_families

    def summary(self) -> str:
        return ", ".join(f"{f}={'ok' if self.passed(f) else len(self.violations[f])}" for f in FAMILIES)


def check_feasibility(sc: Scenario, sol: PlacementSolution, links: dict | None = None) -> FeasibilityReport:
    """Audit every constraint family literally.

    ``links`` overrides the scenario's directed link capacities, e.g. with the
    edges of a Gomory-Hu tree when auditing a tree-routed solution.
    """
    cap = sc.capacity if links is None else links
    servers = set(sc.server_ids)
    clients = set(sc.client_groups)
    nodes = set(sc.nodes)
    sizes = {f.id: f.size for f in sc.vcdns}
    demand = {(d.client, d.vcdn): d.throughput for d in sc.demands}

    for s, f in sol.x:
        if s not in servers or f not in sizes:
            raise ValueError(f"x references unknown server/vcdn ({s}, {f})")
    for s, v, f in sol.y:
        if s not in servers or v not in clients or f not in sizes:
            raise ValueError(f"y references unknown entity ({s}, {v}, {f})")
    for (v, f), path in sol.z.items():
        if v not in clients or f not in sizes:
            raise ValueError(f"z references unknown pair ({v}, {f})")
        for i, j in path:
            if i not in nodes or j not in nodes:
                raise ValueError(f"z path of ({v}, {f}) uses unknown node")

    out = {name: [] for name in FAMILIES}
    out["serve_requires_copy"] = sorted(t for t in sol.y if (t[0], t[2]) not in sol.x)

    served = Counter((v, f) for _, v, f in sol.y)
    for (v, f), d in sorted(demand.items()):
        if d > 0 and served[(v, f)] != 1:
            out["single_server"].append((v, f, served[(v, f)]))

    stream = Counter()
    for s, v, f in sol.y:
        stream[s] += demand.get((v, f), 0)
    storage = Counter()
    for s, f in sol.x:
        storage[s] += sizes[f]
    for spec in sc.servers:
        if stream[spec.node] > spec.stream_capacity:
            out["stream_capacity"].append((spec.node, stream[spec.node], spec.stream_capacity))
        if storage[spec.node] > spec.storage_capacity:
            out["storage_capacity"].append((spec.node, storage[spec.node], spec.storage_capacity))

    load = Counter()
    for (v, f), d in sorted(demand.items()):
        if d <= 0:
            continue
        path = tuple(sol.z.get((v, f), ()))
        arcs = Counter(path)
        net = Counter()
        for (i, j), k in arcs.items():
            # z is binary: an arc listed twice is still one unit of flow
            net[i] += 1
            net[j] -= 1
            load[(i, j)] += d
        for i in sorted(nodes):
            if i == v:
                rhs = -1
            elif i in servers:
                rhs = int((i, v, f) in sol.y)
            else:
                rhs = 0
            if net[i] != rhs:
                out["flow_conservation"].append((v, f, i, net[i], rhs))
        for arc, k in sorted(arcs.items()):
            if k > 1:
                out["flow_conservation"].append((v, f, arc, "repeated arc"))
    for arc, l in sorted(load.items()):
        if l > cap.get(arc, 0):
            out["link_capacity"].append((arc, l, cap.get(arc, 0)))
    return FeasibilityReport(out)
