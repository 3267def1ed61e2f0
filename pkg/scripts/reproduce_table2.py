"""Sign-selection comparison for k = 4..10 (LP bound, optimum, greedy, local search)."""

import argparse
import sys

from modcdpr.harness import ExperimentConfig, rows_to_csv, table2_experiment


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--kmax", type=int, default=10)
    ap.add_argument("--budget", type=int, default=10_000)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--timing", action="store_true")
    args = ap.parse_args()
    cfg = ExperimentConfig(ks=list(range(4, args.kmax + 1)), jobs=args.jobs, timing=args.timing,
                           bnb_budget=args.budget)
    sys.stdout.write(rows_to_csv(table2_experiment(cfg)))


if __name__ == "__main__":
    main()
