#!/usr/bin/env python3
"""Reproduce the desk-scale benchmark tables on the two synthetic suites.

Sweeps the rejection cost d from 0.05 to 0.5 and prints CV risk, rejection
rate and accuracy on unrejected examples per d, writing the summary CSVs
into the output directory.  Equivalent to `rampreject bench synth1-table3`
plus `rampreject bench synth2-table4`.
"""

import argparse
import sys

from rampreject.cli import main as cli_main


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--folds", type=int, default=10)
    parser.add_argument("--reps", type=int, default=10)
    parser.add_argument("--out-dir", default="bench_out")
    args = parser.parse_args(argv)
    common = [
        "--seed", str(args.seed),
        "--folds", str(args.folds),
        "--reps", str(args.reps),
        "--out-dir", args.out_dir,
    ]
    for suite in ("synth1-table3", "synth2-table4"):
        print(f"== {suite} ==")
        code = cli_main(["bench", suite, *common])
        if code != 0:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
