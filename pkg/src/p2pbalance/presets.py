"""Named experiment scenarios and their output layout.

A preset is a base set of config overrides plus one or more swept axes; the
cartesian product of the axes gives the concrete configurations.  Each one
is written to ``<out>/<preset>/<variant>/`` and a ``summary.csv`` collects
the final-step aggregates of every variant.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Optional, Sequence

from .engine import ExperimentResult, SimConfig, run_experiment, write_manifest
from .errors import ConfigError
from .metrics import theoretical_optimal_progress, write_aggregate_csv, write_trials_csv

__all__ = ["Preset", "PRESETS", "expand", "variant_name", "run_preset"]


def _grid(start: float, stop: float, step: float) -> tuple[str, ...]:
    n = round((stop - start) / step)
    return tuple(f"{start + k * step:.2f}".rstrip("0").rstrip(".") for k in range(n + 1))


@dataclass(frozen=True)
class Preset:
    name: str
    description: str
    base: Mapping[str, str] = field(default_factory=dict)
    axes: tuple[tuple[str, tuple[str, ...]], ...] = ()


PRESETS: dict[str, Preset] = {
    p.name: p
    for p in (
        Preset(
            "pm-sweep",
            "PM probability 0, 0.5, 1 on a static network with |G| = |H|",
            {"jobs": "31", "tau": "inf"},
            (("strategy", ("pm:0", "pm:0.5", "pm:1")),),
        ),
        Preset(
            "migration-count",
            "cumulative migrations of DASUD, PM 1, PM 0.5 and EN 1 with three surplus jobs",
            {"jobs": "34", "tau": "inf"},
            (("strategy", ("dasud", "pm:1", "pm:0.5", "en:1")),),
        ),
        Preset(
            "cost-vs-p",
            "progress at the horizon over a PM probability x migration cost grid",
            {"jobs": "31", "tau": "inf"},
            (
                ("migration_cost", ("0", "5", "10")),
                ("strategy", tuple(f"pm:{p}" for p in _grid(0.0, 1.0, 0.05))),
            ),
        ),
        Preset(
            "coverage",
            "progress at the horizon as |G| grows from 1 to 4|H|, migration cost 5",
            {"migration_cost": "5", "tau": "inf"},
            (
                ("strategy", ("dasud", "pm:0.35")),
                ("jobs", tuple(str(m) for m in range(1, 4 * 31 + 1))),
            ),
        ),
        Preset(
            "scheduled-events",
            "one host exits at t=200 and one enters at t=300",
            {"jobs": "31", "tau": "inf", "event": "exit@200,enter@300"},
            (("strategy", ("en:5", "dasud", "pm:0.35")),),
        ),
        Preset(
            "dynamicity-sweep",
            "progress and imbalance at the horizon across half-lives, migration cost 5",
            {"jobs": "31", "migration_cost": "5"},
            (
                ("strategy", ("dasud", "pm:0.35")),
                ("tau", ("5", "10", "20", "50", "100", "200", "500", "1000", "inf")),
            ),
        ),
        Preset(
            "selection",
            "job selection policies under hop-proportional sync latency",
            {"jobs": "31", "tau": "inf", "gamma": "3", "strategy": "pm:0.35"},
            (("select", ("none", "edgecut", "mindist")),),
        ),
    )
}


def variant_name(assignment: Sequence[tuple[str, str]]) -> str:
    if not assignment:
        return "default"
    return "__".join(f"{k}-{v.replace(':', '_')}" for k, v in assignment)


def expand(
    preset: Preset,
    base: SimConfig,
    overrides: Mapping[str, str] = {},
    sweeps: Mapping[str, Sequence[str]] = {},
) -> list[tuple[tuple[tuple[str, str], ...], SimConfig]]:
    """Concrete configs of ``preset``: defaults < preset base < ``overrides`` < swept values."""
    axes = []
    for key, values in preset.axes:
        axes.append((key, tuple(sweeps.get(key, values))))
    unknown = set(sweeps) - {k for k, _ in preset.axes}
    if unknown:
        raise ConfigError(f"preset {preset.name} has no swept parameter {sorted(unknown)[0]!r}")
    cfg = base.updated(preset.base).updated(overrides)
    out = []
    keys = [k for k, _ in axes]
    for combo in itertools.product(*(v for _, v in axes)):
        assignment = tuple(zip(keys, combo))
        out.append((assignment, cfg.updated(dict(assignment))))
    return out


SUMMARY_HEADER = (
    "variant",
    "t",
    "sigma_mean",
    "sigma_se",
    "progress_mean",
    "progress_se",
    "migrations_mean",
    "migrations_se",
    "theoretical_optimal",
)


def _fmt(x: Optional[float]) -> str:
    return "" if x is None else f"{x:.6f}"


def run_preset(
    name: str,
    out_root: str | Path,
    base: SimConfig | None = None,
    overrides: Mapping[str, str] = {},
    sweeps: Mapping[str, Sequence[str]] = {},
    workers: int = 1,
    trial_csv: bool = False,
    progress_cb: Callable[[str, ExperimentResult], None] | None = None,
) -> list[tuple[str, ExperimentResult]]:
    """Run every variant of preset ``name`` and write its files under ``out_root/name``."""
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    preset = PRESETS[name]
    base = base or SimConfig()
    variants = expand(preset, base, overrides, sweeps)
    root = Path(out_root) / name
    root.mkdir(parents=True, exist_ok=True)

    results = []
    for assignment, cfg in variants:
        vname = variant_name(assignment)
        res = run_experiment(cfg, workers=workers)
        vdir = root / vname
        vdir.mkdir(parents=True, exist_ok=True)
        write_aggregate_csv(vdir / "aggregate.csv", res.rows)
        write_manifest(vdir / "manifest.txt", cfg, res.seeds)
        if trial_csv:
            write_trials_csv(vdir / "trials.csv", [tr.samples for tr in res.trials])
        results.append((vname, res))
        if progress_cb is not None:
            progress_cb(vname, res)

    with open(root / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        axis_keys = [k for k, _ in preset.axes]
        w.writerow((*axis_keys, *SUMMARY_HEADER))
        for (assignment, cfg), (vname, res) in zip(variants, results):
            opt = theoretical_optimal_progress(cfg.steps, cfg.n_jobs, cfg.n_hosts, cfg.iter_work)
            if res.rows:
                r = res.rows[-1]
                stats = (r.t, _fmt(r.sigma_mean), _fmt(r.sigma_se), _fmt(r.progress_mean),
                         _fmt(r.progress_se), _fmt(r.migrations_mean), _fmt(r.migrations_se))
            else:
                stats = (0, "", "", "", "", "", "")
            w.writerow((*(v for _, v in assignment), vname, *stats, _fmt(opt)))

    lines = [f"# preset {name}: {preset.description}\n"]
    lines += [f"# axis {k}: {','.join(v)}\n" for k, v in
              ((k, tuple(sweeps.get(k, vals))) for k, vals in preset.axes)]
    lines.append("# base configuration before swept values\n")
    lines.append(base.updated(preset.base).updated(overrides).to_text())
    (root / "manifest.txt").write_text("".join(lines))
    return results
