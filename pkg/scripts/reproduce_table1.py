"""Balance-constant statistics for CBD module bases, written as CSV."""

import argparse
import sys

from modcdpr.harness import ExperimentConfig, rows_to_csv, table1_experiment


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--trials", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=4)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()
    cfg = ExperimentConfig(trials=args.trials, seed=args.seed, jobs=args.jobs)
    text = rows_to_csv(table1_experiment(cfg))
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


if __name__ == "__main__":
    main()
