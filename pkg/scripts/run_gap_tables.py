#!/usr/bin/env python3
"""Reproduce the optimality-gap table over the vendored fixtures.

Solves the AC program and its conic relaxation for every bundled case,
including the congested and angle-tightened variants, and prints the
aligned gap table. Pass ``--csv`` for machine-readable output instead.
"""

import argparse
import pathlib
import sys

from opfbench.bench import BenchOptions, format_table, records_to_csv, run_benchmark

FIXTURES = pathlib.Path(__file__).resolve().parent.parent / "fixtures"


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--csv", action="store_true", help="emit CSV instead of a table")
    ap.add_argument("--jobs", type=int, default=1, help="parallel workers")
    args = ap.parse_args()

    paths = sorted(str(p) for p in FIXTURES.glob("*.m"))
    records = run_benchmark(paths, BenchOptions(jobs=args.jobs))
    if args.csv:
        sys.stdout.write(records_to_csv(records))
    else:
        print(format_table(records))
    return 0


if __name__ == "__main__":
    sys.exit(main())
