#!/usr/bin/env python3
"""Summarise the qualitative trends from scenario outputs.

Reads ``<out>/<scenario>/summary.csv`` files written by reproduce_all.py or
``p2pbalance run-preset`` and prints the comparisons the scenarios exist for.
Missing scenarios are skipped.
"""

import argparse
import csv
from collections import defaultdict
from pathlib import Path


def load(root: Path, name: str):
    path = root / name / "summary.csv"
    if not path.exists():
        return None
    with open(path) as fh:
        return list(csv.DictReader(fh))


def num(row, key):
    return float(row[key]) if row[key] else float("nan")


def cost_vs_p(rows):
    by_p = defaultdict(dict)
    for r in rows:
        by_p[float(r["strategy"].split(":")[1])][r["migration_cost"]] = num(r, "progress_mean")
    worst = {p: min(v.values()) for p, v in by_p.items()}
    best = max(worst, key=worst.get)
    print(f"cost-vs-p: min-over-costs progress peaks at p={best:g} ({worst[best]:.2f})")
    for p in sorted(by_p):
        cells = "  ".join(f"c={c}:{v:6.2f}" for c, v in sorted(by_p[p].items(), key=lambda kv: int(kv[0])))
        print(f"  p={p:<4g} {cells}")


def by_strategy(rows, title, key):
    print(title)
    for r in rows:
        print(f"  {r['variant']:40s} sigma={num(r, 'sigma_mean'):.3f} progress={num(r, 'progress_mean'):.2f} "
              f"M={num(r, 'migrations_mean'):.1f}")


def dynamicity(rows):
    print("dynamicity-sweep:")
    table = defaultdict(dict)
    for r in rows:
        table[r["strategy"]][r["tau"]] = r
    for s, cells in table.items():
        for tau, r in cells.items():
            print(f"  {s:8s} tau={tau:>5s} sigma={num(r, 'sigma_mean'):.3f} progress={num(r, 'progress_mean'):.2f}")


def coverage(rows):
    print("coverage (progress against the theoretical optimum):")
    for r in rows:
        if int(r["jobs"]) % 31 == 0 or r["jobs"] in ("1", "15"):
            print(f"  {r['strategy']:8s} |G|={r['jobs']:>3s} progress={num(r, 'progress_mean'):6.2f} "
                  f"optimum={num(r, 'theoretical_optimal'):6.2f}")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out", nargs="?", default="out")
    root = Path(ap.parse_args().out)
    simple = {"pm-sweep": "pm-sweep:", "migration-count": "migration-count:", "scheduled-events": "scheduled-events:",
              "selection": "selection:"}
    for name, title in simple.items():
        rows = load(root, name)
        if rows:
            by_strategy(rows, title, name)
    for name, fn in (("cost-vs-p", cost_vs_p), ("dynamicity-sweep", dynamicity), ("coverage", coverage)):
        rows = load(root, name)
        if rows:
            fn(rows)


if __name__ == "__main__":
    main()
