"""Small-scale sweep: OPAC and HPAC on the bundled scenario for |F| = 3..11.

Writes the CSV and prints the per-|F| summary with the gap table.
"""
import argparse
import sys

from vcdn.cli import main


def parse_args():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", default="small_scale.csv")
    p.add_argument("--sweep", default="3..11")
    p.add_argument("--budget", default="60")
    return p.parse_args()


if __name__ == "__main__":
    args = parse_args()
    code = main(["run", "--solver", "both", "--sweep", args.sweep, "--budget", args.budget,
                 "--out", args.out])
    if code in (0, 2, 3):
        main(["report", args.out])
    sys.exit(code)
