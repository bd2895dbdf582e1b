#!/usr/bin/env python3
"""Run every named scenario and write its CSVs under an output directory.

    python3 scripts/reproduce_all.py --out out [--trials 50] [--only pm-sweep,selection]

Full size (50 trials) takes a few hours on one core; ``--trials 5`` gives
a rough picture in about a quarter of the time.
"""

import argparse
import logging
import time

from p2pbalance.presets import PRESETS, run_preset


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="out")
    ap.add_argument("--trials", type=int, help="override the trial count of every scenario")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--only", help="comma-separated scenario names")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--trial-csv", action="store_true")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    names = args.only.split(",") if args.only else list(PRESETS)
    overrides = {"seed": str(args.seed)}
    if args.trials:
        overrides["trials"] = str(args.trials)
    for name in names:
        t0 = time.time()
        results = run_preset(name, args.out, overrides=overrides, workers=args.workers, trial_csv=args.trial_csv)
        logging.info("%-18s %3d variants  %7.1fs", name, len(results), time.time() - t0)


if __name__ == "__main__":
    main()
