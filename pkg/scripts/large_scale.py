"""Large-scale sweep on an Erdos-Renyi topology.

HPAC runs for every |F| in the sweep. OPAC runs only with --opac, since at
this size it normally ends on its time budget.
"""
import argparse
import sys

from vcdn.cli import main


def parse_args():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--m", type=int, default=200)
    p.add_argument("--seed", type=int, default=3)
    p.add_argument("--sweep", default="20,40,60,80,100")
    p.add_argument("--opac", action="store_true", help="also run the exact solver")
    p.add_argument("--budget", default="60")
    p.add_argument("--out", default="large_scale.csv")
    return p.parse_args()


if __name__ == "__main__":
    args = parse_args()
    solver = "both" if args.opac else "hpac"
    code = main(["run", "--generator", "er", "--n", str(args.n), "--m", str(args.m),
                 "--seed", str(args.seed), "--solver", solver, "--sweep", args.sweep,
                 "--budget", args.budget, "--out", args.out])
    if code in (0, 2, 3):
        main(["report", args.out])
    sys.exit(code)
