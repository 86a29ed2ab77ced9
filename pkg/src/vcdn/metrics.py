"""Cost metrics of a placement: migration cost and time, replicas, vCache, vStream, gap."""

from __future__ import annotations

from dataclasses import astuple, dataclass, fields
from fractions import Fraction

from .model import Number, Scenario
from .solution import PlacementSolution

GB_TO_GB_BITS = 8  # vCDN sizes are GB; migration volumes are Gb
MBPS_TO_GBPS = Fraction(1, 1000)

SEQUENTIAL = "sequential"
PARALLEL = "parallel"


@dataclass(frozen=True)
class CostReport:
    migration_cost: Number
    migration_time_sequential: Number  # seconds
    migration_time_parallel: Number  # seconds
    replica_number: int
    vcache_cost: Number
    vstream_cost: Number

    def as_tuple(self):
        return astuple(self)


def migration_cost(sc: Scenario, sol: PlacementSolution) -> Number:
    return sum((sc.migration_cost(s, f) for s, f in sol.x), 0)


def _transfer_times(sc: Scenario, sol: PlacementSolution) -> list[Number]:
    """Seconds to move each placed copy over its slowest migration-path link."""
    size = {f.id: f.size for f in sc.vcdns}
    times = []
    for s, f in sorted(sol.x):
        path = sol.migration_paths.get((s, f), ())
        if not path:
            times.append(0)
            continue
        slowest = min(c for _, _, c in path)
        if slowest == 0:
            raise ZeroDivisionError(f"migration path of vcdn {f} to {s} crosses a zero-capacity link")
        times.append(Fraction(size[f] * GB_TO_GB_BITS) / (slowest * MBPS_TO_GBPS))
    return times


def migration_time(sc: Scenario, sol: PlacementSolution, mode: str = SEQUENTIAL) -> Number:
    times = _transfer_times(sc, sol)
    if mode == SEQUENTIAL:
        return sum(times, 0)
    if mode == PARALLEL:
        return max(times, default=0)
    raise ValueError(f"unknown mode {mode!r}")


def replica_number(sc: Scenario, sol: PlacementSolution) -> int:
    origin = {f.id: f.origin for f in sc.vcdns}
    return sum(1 for s, f in sol.x if s != origin[f])


def vcache_cost(sc: Scenario, sol: PlacementSolution) -> Number:
    size = {f.id: f.size for f in sc.vcdns}
    total = sum(s.storage_capacity for s in sc.servers)
    if total == 0:
        return 0
    return Fraction(sum((size[f] for _, f in sol.x), 0)) / total


def vstream_cost(sc: Scenario, sol: PlacementSolution) -> Number:
    demand = {(d.client, d.vcdn): d.throughput for d in sc.demands}
    total = sum(s.stream_capacity for s in sc.servers)
    if total == 0:
        return 0
    return Fraction(sum((demand.get((v, f), 0) for _, v, f in sol.y), 0)) / total


def gap(c_hpac: Number, c_opac: Number) -> Fraction | None:
    """Relative excess of the heuristic cost in percent; None when the optimum is 0."""
    if c_opac == 0:
        return None
    return Fraction(100) * (Fraction(c_hpac) - Fraction(c_opac)) / Fraction(c_opac)


def cost_report(sc: Scenario, sol: PlacementSolution) -> CostReport:
    return CostReport(
        migration_cost=migration_cost(sc, sol),
        migration_time_sequential=migration_time(sc, sol, SEQUENTIAL),
        migration_time_parallel=migration_time(sc, sol, PARALLEL),
        replica_number=replica_number(sc, sol),
        vcache_cost=vcache_cost(sc, sol),
        vstream_cost=vstream_cost(sc, sol),
    )


def gap_report(hpac: CostReport, opac: CostReport) -> dict[str, Fraction | None]:
    return {f.name: gap(getattr(hpac, f.name), getattr(opac, f.name)) for f in fields(CostReport)}
