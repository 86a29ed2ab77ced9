import csv
import io
import statistics
import subprocess
import sys

import pytest

from instances import fig4
from vcdn.cli import COLUMNS, RunConfig, UsageError, main, parse_sweep, read_rows, report, run, summarize
from vcdn.model import load_scenario, serialize_scenario


def rows_of(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_parse_sweep():
    assert parse_sweep("3..6") == (3, 4, 5, 6)
    assert parse_sweep("20,40") == (20, 40)
    for bad in ("", "5..3", "a..b", ","):
        with pytest.raises(UsageError):
            parse_sweep(bad)


def test_config_validation():
    with pytest.raises(UsageError):
        RunConfig(sweep=())
    with pytest.raises(UsageError):
        RunConfig(sweep=(0,))
    with pytest.raises(UsageError):
        RunConfig(sweep=(3,), budget=0)
    with pytest.raises(UsageError):
        RunConfig(sweep=(3,), generator="three-tier", m=5)


@pytest.mark.parametrize("argv", [
    ["run", "--sweep", ""],
    ["run", "--sweep", "7..3"],
    ["run", "--sweep", "3", "--solver", "cplex"],
    ["run"],
    ["frobnicate"],
    ["run", "--sweep", "99"],
])
def test_usage_errors_exit_64(argv, capsys):
    with pytest.raises(SystemExit) as e:
        raise SystemExit(main(argv))
    assert e.value.code == 64


def test_run_both_small_scale(capsys):
    assert main(["run", "--solver", "both", "--sweep", "3..6", "--no-timing"]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0] == ",".join(COLUMNS)
    rows = rows_of(out)
    assert [(r["solver"], r["|F|"]) for r in rows] == [
        (s, str(F)) for F in range(3, 7) for s in ("opac", "hpac", "gap")]
    assert all(r["status"] == "ok" for r in rows)
    assert all(r["runtime_ms"] == "" for r in rows)
    for r in rows:
        if r["solver"] == "gap" and r["migration_cost"]:
            assert float(r["migration_cost"]) >= 0


def test_run_records_runtime(tmp_path):
    out = tmp_path / "a.csv"
    assert main(["run", "--solver", "hpac", "--sweep", "3", "--out", str(out)]) == 0
    (row,) = read_rows(out)
    assert float(row["runtime_ms"]) > 0


def test_infeasible_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(serialize_scenario(fig4(stream=(30, 30))))
    assert main(["run", "--scenario", str(path), "--sweep", "1", "--no-timing"]) == 2
    rows = rows_of(capsys.readouterr().out)
    assert [r["status"] for r in rows] == ["infeasible", "infeasible", "n/a"]


def test_budget_exit_code(capsys):
    code = main(["run", "--generator", "three-tier", "--seed", "8", "--sweep", "10",
                 "--solver", "opac", "--node-budget", "5", "--no-timing"])
    assert code == 3
    assert rows_of(capsys.readouterr().out)[0]["status"] == "budget"


def test_run_function_is_deterministic():
    cfg = RunConfig(sweep=(3, 7), timing=False)
    assert run(cfg) == run(cfg)


def test_report_single_row(tmp_path):
    path = tmp_path / "one.csv"
    path.write_text(",".join(COLUMNS) + "\nsc,hpac,5,12,143.5,71.75,2,0.03,0.15,8.0,ok\n")
    summary = summarize(read_rows(path))
    stats = summary[("hpac", 5)]
    assert stats["migration_cost"] == (12, 12, 12)
    assert stats["seq_time"] == (143.5, 143.5, 143.5)
    assert stats["runtime_ms"] == (8.0, 8.0, 8.0)
    assert "hpac" in report(path)


def test_report_means_match_recomputation(tmp_path):
    path = tmp_path / "many.csv"
    assert main(["run", "--generator", "three-tier", "--seed", "0", "--solver", "hpac",
                 "--sweep", "3..6", "--out", str(path)]) == 0
    extra = tmp_path / "two.csv"
    assert main(["run", "--generator", "three-tier", "--seed", "1", "--solver", "hpac",
                 "--sweep", "3..6", "--out", str(extra), "--no-timing"]) in (0, 2)
    body = path.read_text() + "".join(extra.read_text().splitlines(True)[1:])
    merged = tmp_path / "merged.csv"
    merged.write_text(body)
    raw = list(csv.DictReader(io.StringIO(body)))
    summary = summarize(read_rows(merged))
    for (solver, F), stats in summary.items():
        group = [r for r in raw if r["solver"] == solver and int(r["|F|"]) == F]
        for col, (mean, lo, hi) in stats.items():
            vals = [float(r[col]) for r in group if r[col]]
            assert mean == pytest.approx(statistics.fmean(vals))
            assert (lo, hi) == (min(vals), max(vals))


def test_report_gap_table(tmp_path, capsys):
    path = tmp_path / "g.csv"
    assert main(["run", "--sweep", "5..6", "--out", str(path), "--no-timing"]) == 0
    assert main(["report", str(path)]) == 0
    text = capsys.readouterr().out
    assert "|F|   Gap (%)" in text
    assert "  6   100.00" in text


@pytest.mark.parametrize("content", ["a,b\n1,2\n", ",".join(COLUMNS) + "\nx,hpac,notanint,,,,,,,,ok\n",
                                     ",".join(COLUMNS) + "\nx,hpac,3\n"])
def test_report_malformed(tmp_path, content):
    path = tmp_path / "m.csv"
    path.write_text(content)
    assert main(["report", str(path)]) == 65


def test_generate_and_tree(tmp_path):
    sc_path = tmp_path / "sc.json"
    assert main(["generate", "--generator", "er", "--n", "20", "--m", "30", "--seed", "2",
                 "--vcdns", "4", "--out", str(sc_path)]) == 0
    sc = load_scenario(sc_path)
    assert len(sc.nodes) == 20 and len(sc.vcdns) == 4
    tree_path = tmp_path / "tree.txt"
    assert main(["tree", "--scenario", str(sc_path), "--out", str(tree_path)]) == 0
    assert len(tree_path.read_text().splitlines()) == 19


def test_module_entry_point():
    done = subprocess.run([sys.executable, "-m", "vcdn", "run", "--sweep", "3", "--solver", "hpac",
                           "--no-timing"], capture_output=True, text=True)
    assert done.returncode == 0
    assert done.stdout.startswith("scenario,solver,|F|")
