"""Experiment harness: sweep the vCDN count, run the solvers and write CSV rows.

Subcommands::

    vcdn run --generator er --n 100 --m 200 --solver hpac --sweep 20..100
    vcdn run --solver both --sweep 3..11            # shipped small-scale scenario
    vcdn report results.csv
    vcdn generate --generator three-tier --seed 3 --vcdns 11 --out sc.json
    vcdn tree --scenario sc.json --out tree.txt
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import statistics
import sys
import time
from dataclasses import dataclass
from fractions import Fraction

from .ghtree import gomory_hu, scenario_flow_graph, write_edgelist
from .hpac import MOVE, REPLICATE, hpac_solve, tree_links
from .metrics import CostReport, cost_report, gap
from .model import (
    Scenario,
    ScenarioError,
    gen_erdos_renyi,
    gen_three_tier,
    load_scenario,
    load_small_scale,
    serialize_scenario,
)
from .opac import BudgetExceeded, Infeasible, route_assignment, solve_exact
from .solution import check_feasibility

log = logging.getLogger(__name__)

COLUMNS = ("scenario", "solver", "|F|", "migration_cost", "seq_time", "par_time",
           "replicas", "vcache", "vstream", "runtime_ms", "status")
METRIC_COLUMNS = COLUMNS[3:9]

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_BUDGET = 3
EXIT_USAGE = 64
EXIT_DATA = 65

SOLVERS = ("opac", "hpac", "both")
GENERATORS = ("three-tier", "er")


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    """One harness run. With neither ``scenario_file`` nor ``generator`` the
    shipped small-scale scenario is used."""

    sweep: tuple[int, ...]
    solver: str = "both"
    scenario_file: str | None = None
    generator: str | None = None
    n: int | None = None
    m: int | None = None
    seed: int = 0
    budget: float = 60.0
    node_budget: int | None = None
    mode: str = REPLICATE
    timing: bool = True
    route_steps: int = 200_000
    out: str | None = None

    def __post_init__(self):
        if not self.sweep:
            raise UsageError("empty sweep")
        if any(f < 1 for f in self.sweep):
            raise UsageError("sweep values must be >= 1")
        if self.budget <= 0:
            raise UsageError("budget must be > 0")
        if self.solver not in SOLVERS:
            raise UsageError(f"unknown solver {self.solver!r}")
        if self.mode not in (MOVE, REPLICATE):
            raise UsageError(f"unknown mode {self.mode!r}")
        if self.scenario_file and self.generator:
            raise UsageError("--scenario and --generator are exclusive")
        if self.generator is not None and self.generator not in GENERATORS:
            raise UsageError(f"unknown generator {self.generator!r}")
        if self.generator == "three-tier" and self.m is not None:
            raise UsageError("--m only applies to the er generator")


def parse_sweep(text: str) -> tuple[int, ...]:
    """``A..B`` (inclusive) or a comma list."""
    text = text.strip()
    try:
        if ".." in text:
            a, b = text.split("..")
            values = tuple(range(int(a), int(b) + 1))
        else:
            values = tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise UsageError(f"bad sweep {text!r}") from None
    if not values:
        raise UsageError(f"empty sweep {text!r}")
    return values


def base_scenario(cfg: RunConfig) -> Scenario:
    """Scenario holding the largest catalog of the sweep; points restrict it."""
    top = max(cfg.sweep)
    if cfg.scenario_file:
        return load_scenario(cfg.scenario_file)
    if cfg.generator == "three-tier":
        return gen_three_tier(n_access=cfg.n or 10, seed=cfg.seed, n_vcdns=top)
    if cfg.generator == "er":
        return gen_erdos_renyi(cfg.n or 100, cfg.m or 200, seed=cfg.seed, n_vcdns=top)
    return load_small_scale()


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, int) or (isinstance(x, Fraction) and x.denominator == 1):
        return str(int(x))
    return f"{float(x):.6f}"


def _solve_opac(sc, cfg):
    try:
        return solve_exact(sc, time_budget=cfg.budget, node_budget=cfg.node_budget), "ok"
    except Infeasible:
        return None, "infeasible"
    except BudgetExceeded as e:
        return e.incumbent, "budget"


def _solve_hpac(sc, cfg, tree):
    try:
        return hpac_solve(sc, mode=cfg.mode, tree=tree), "ok"
    except Infeasible:
        return None, "infeasible"


def _hpac_status(sc, sol, tree, cfg) -> str:
    """``ok`` when the assignment also routes on the real links, else ``tree``."""
    if not check_feasibility(sc, sol, tree_links(tree)).feasible:
        return "audit-failed"
    try:
        routed = route_assignment(sc, sol, max_steps=cfg.route_steps)
    except BudgetExceeded:
        return "tree"
    if routed is None or not check_feasibility(sc, routed).feasible:
        return "tree"
    return "ok"


def _row(name, solver, F, report: CostReport | None, ms, status, timing) -> list[str]:
    values = [""] * len(METRIC_COLUMNS) if report is None else [fmt(v) for v in report.as_tuple()]
    runtime = f"{ms:.1f}" if timing and ms is not None else ""
    return [name, solver, str(F), *values, runtime, status]


def run(cfg: RunConfig) -> tuple[int, list[list[str]]]:
    base = base_scenario(cfg)
    solvers = ("opac", "hpac") if cfg.solver == "both" else (cfg.solver,)
    rows = []
    statuses = set()
    tree = tree_ms = None
    if "hpac" in solvers:
        # the tree depends on the links only; build it once and charge its
        # build time to every HPAC row so runtime_ms stays end-to-end
        t0 = time.perf_counter()
        tree = gomory_hu(scenario_flow_graph(base))
        tree_ms = (time.perf_counter() - t0) * 1000
    for F in cfg.sweep:
        try:
            sc = base.restrict_vcdns(F)
        except ScenarioError as e:
            raise UsageError(str(e)) from None
        reports = {}
        for solver in solvers:
            t0 = time.perf_counter()
            if solver == "opac":
                sol, status = _solve_opac(sc, cfg)
                ms = (time.perf_counter() - t0) * 1000
                if status == "ok" and not check_feasibility(sc, sol).feasible:
                    status = "audit-failed"
            else:
                sol, status = _solve_hpac(sc, cfg, tree)
                ms = (time.perf_counter() - t0) * 1000 + tree_ms
                if sol is not None:
                    status = _hpac_status(sc, sol, tree, cfg)
            rep = cost_report(sc, sol) if sol is not None else None
            reports[solver] = (rep, status)
            statuses.add(status)
            log.info("%s |F|=%d %s %s", sc.name, F, solver, status)
            rows.append(_row(base.name, solver, F, rep, ms, status, cfg.timing))
        if cfg.solver == "both":
            rows.append(_gap_row(base.name, F, reports["hpac"], reports["opac"]))
    if "infeasible" in statuses:
        code = EXIT_INFEASIBLE
    elif "budget" in statuses:
        code = EXIT_BUDGET
    else:
        code = EXIT_OK
    return code, rows


def _gap_row(name, F, hpac, opac) -> list[str]:
    (h, hs), (o, os_) = hpac, opac
    if h is None or o is None or os_ != "ok":
        return [name, "gap", str(F), *[""] * len(METRIC_COLUMNS), "", "n/a"]
    values = [fmt(gap(a, b)) for a, b in zip(h.as_tuple(), o.as_tuple())]
    return [name, "gap", str(F), *values, "", hs]


def write_csv(rows, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(COLUMNS)
    w.writerows(rows)


def csv_text(rows) -> str:
    buf = io.StringIO()
    write_csv(rows, buf)
    return buf.getvalue()


# ---- report ---------------------------------------------------------------

def read_rows(path) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != COLUMNS:
            raise ValueError(f"malformed CSV header: {reader.fieldnames}")
        rows = list(reader)
    for i, r in enumerate(rows, start=2):
        if None in r or any(v is None for v in r.values()):
            raise ValueError(f"line {i}: wrong number of fields")
        try:
            int(r["|F|"])
            for c in METRIC_COLUMNS + ("runtime_ms",):
                if r[c]:
                    float(r[c])
        except ValueError:
            raise ValueError(f"line {i}: non-numeric field") from None
    return rows


def summarize(rows: list[dict]) -> dict:
    """(solver, |F|) -> column -> (mean, min, max) over rows with a value."""
    groups: dict[tuple[str, int], list[dict]] = {}
    for r in rows:
        groups.setdefault((r["solver"], int(r["|F|"])), []).append(r)
    out = {}
    for key in sorted(groups):
        stats = {}
        for c in METRIC_COLUMNS + ("runtime_ms",):
            vals = [float(r[c]) for r in groups[key] if r[c] != ""]
            if vals:
                stats[c] = (statistics.fmean(vals), min(vals), max(vals))
        out[key] = stats
    return out


def report(path) -> str:
    rows = read_rows(path)
    summary = summarize(rows)
    lines = ["solver  |F|  column          mean          min           max"]
    for (solver, F), stats in summary.items():
        for c, (mean, lo, hi) in stats.items():
            lines.append(f"{solver:<7} {F:>4}  {c:<14} {mean:>12.6g}  {lo:>12.6g}  {hi:>12.6g}")
    gaps = [(F, s["migration_cost"]) for (solver, F), s in summary.items()
            if solver == "gap" and "migration_cost" in s]
    if gaps:
        lines += ["", "|F|   Gap (%)"]
        lines += [f"{F:>3}   {mean:.2f}" for F, (mean, _, _) in gaps]
    return "\n".join(lines) + "\n"


# ---- argument parsing -------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_source(p):
    src = p.add_mutually_exclusive_group()
    src.add_argument("--scenario", metavar="FILE")
    src.add_argument("--generator", choices=GENERATORS)
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vcdn", description="vCDN placement experiments")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="sweep |F| and write CSV rows")
    _add_source(r)
    r.add_argument("--solver", choices=SOLVERS, default="both")
    r.add_argument("--sweep", required=True, help="A..B or comma list")
    r.add_argument("--budget", type=float, default=60.0, help="OPAC time budget per point (s)")
    r.add_argument("--node-budget", type=int, help="OPAC search-node budget per point")
    r.add_argument("--mode", choices=(MOVE, REPLICATE), default=REPLICATE)
    r.add_argument("--no-timing", action="store_true", help="leave runtime_ms empty")
    r.add_argument("--out", metavar="FILE")

    rep = sub.add_parser("report", help="summarize a CSV written by run")
    rep.add_argument("csv")

    g = sub.add_parser("generate", help="write a generated scenario as JSON")
    g.add_argument("--generator", choices=GENERATORS, default="three-tier")
    g.add_argument("--n", type=int)
    g.add_argument("--m", type=int)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--vcdns", type=int, default=10)
    g.add_argument("--out", metavar="FILE")

    t = sub.add_parser("tree", help="write the Gomory-Hu tree of a scenario as an edge list")
    _add_source(t)
    t.add_argument("--out", metavar="FILE", required=True)
    return parser


def _emit(text, out):
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            cfg = RunConfig(
                sweep=parse_sweep(args.sweep), solver=args.solver, scenario_file=args.scenario,
                generator=args.generator, n=args.n, m=args.m, seed=args.seed, budget=args.budget,
                node_budget=args.node_budget, mode=args.mode, timing=not args.no_timing, out=args.out,
            )
            code, rows = run(cfg)
            _emit(csv_text(rows), cfg.out)
            return code
        if args.command == "report":
            try:
                sys.stdout.write(report(args.csv))
            except (ValueError, OSError) as e:
                print(f"vcdn: {e}", file=sys.stderr)
                return EXIT_DATA
            return EXIT_OK
        if args.command == "generate":
            if args.generator == "er":
                sc = gen_erdos_renyi(args.n or 100, args.m or 200, seed=args.seed, n_vcdns=args.vcdns)
            else:
                sc = gen_three_tier(n_access=args.n or 10, seed=args.seed, n_vcdns=args.vcdns)
            _emit(serialize_scenario(sc), args.out)
            return EXIT_OK
        if args.command == "tree":
            cfg = RunConfig(sweep=(1,), scenario_file=args.scenario, generator=args.generator,
                            n=args.n, m=args.m, seed=args.seed)
            write_edgelist(gomory_hu(scenario_flow_graph(base_scenario(cfg))), args.out)
            return EXIT_OK
    except UsageError as e:
        print(f"vcdn: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ScenarioError, OSError) as e:
        print(f"vcdn: {e}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
