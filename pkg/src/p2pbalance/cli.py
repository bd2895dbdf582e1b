"""Command-line front end.

    p2pbalance run [flags]                 one experiment -> <out>/run/
    p2pbalance run-preset NAME [flags]     a named scenario -> <out>/NAME/...
    p2pbalance list-presets

Exit status: 0 on success, 2 on a usage error, 1 on a model violation.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .engine import SimConfig, run_experiment, write_outputs
from .errors import ConfigError, ExperimentError, ModelViolation, UnknownHostError
from .presets import PRESETS, run_preset

log = logging.getLogger("p2pbalance")

# flag -> config key; flags left unset do not override anything
FLAG_KEYS = {
    "hosts": "hosts",
    "jobs": "jobs",
    "guest": "guest",
    "strategy": "strategy",
    "select": "select",
    "iter_work": "iter_work",
    "gamma": "gamma",
    "migration_cost": "migration_cost",
    "tau": "tau",
    "event": "event",
    "steps": "steps",
    "trials": "trials",
    "seed": "seed",
    "progress_norm": "progress_norm",
    "placement": "placement",
    "cadence": "cadence",
}


def read_config_file(path: str | Path) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment.  Repeated ``event`` keys accumulate."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key == "event" and values.get("event"):
            value = f"{values['event']},{value}" if value else values["event"]
        values[key] = value
    return values


def flag_values(ns: argparse.Namespace) -> dict[str, str]:
    out = {}
    for attr, key in FLAG_KEYS.items():
        value = getattr(ns, attr, None)
        if value is None:
            continue
        out[key] = ",".join(value) if isinstance(value, list) else str(value)
    return out


def parse_config(ns: argparse.Namespace) -> SimConfig:
    """Defaults, then the ``--config`` file, then explicit flags."""
    values: dict[str, str] = {}
    if ns.config:
        values.update(read_config_file(ns.config))
    values.update(flag_values(ns))
    return SimConfig().updated(values)


def _add_sim_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("simulation")
    g.add_argument("--config", help="key=value config file (flags override it)")
    g.add_argument("--hosts", type=int, help="host count |H| (default 31)")
    g.add_argument("--jobs", type=int, help="job count |G| (default 31)")
    g.add_argument("--guest", help="ring | grid | regular:<d> (default grid)")
    g.add_argument("--strategy", help="en:<x> | dasud | pm:<p> (default pm:0.35)")
    g.add_argument("--select", help="none | edgecut | mindist (default none)")
    g.add_argument("--iter-work", dest="iter_work", type=float, help="work units per iteration R (default 10)")
    g.add_argument("--gamma", type=float, help="sync latency per hop (default 0)")
    g.add_argument("--migration-cost", dest="migration_cost", type=int, help="steps a migrating job is idle (default 0)")
    g.add_argument("--tau", help="half-life in steps, or inf (default inf)")
    g.add_argument("--event", action="append", help="exit@<t>[:<host>] or enter@<t>; repeatable")
    g.add_argument("--steps", type=int, help="horizon T (default 500)")
    g.add_argument("--trials", type=int, help="trials per configuration (default 50)")
    g.add_argument("--seed", type=int, help="master seed (default 0)")
    g.add_argument("--progress-norm", dest="progress_norm", help="verbatim | mean (default verbatim)")
    g.add_argument("--placement", help="single_host | uniform_random | balanced (default single_host)")
    g.add_argument("--cadence", type=int, help="balance every N steps (default 1)")
    g.add_argument("--out", default="out", help="output directory (default ./out)")
    g.add_argument("--workers", type=int, default=1, help="parallel trial processes (default 1)")
    g.add_argument("-v", "--verbose", action="store_true", help="log per-variant summaries")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="p2pbalance", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment")
    _add_sim_flags(run)
    run.add_argument("--name", default="run", help="subdirectory of --out (default run)")
    run.add_argument("--dump-graph", action="store_true", help="also write the first trial's initial edge list")

    pre = sub.add_parser("run-preset", help="run a named scenario")
    pre.add_argument("name", help=", ".join(PRESETS))
    _add_sim_flags(pre)
    pre.add_argument("--sweep", action="append", default=[], metavar="KEY=V1,V2,...",
                     help="replace the values of a swept parameter; repeatable")
    pre.add_argument("--trial-csv", action="store_true", help="also write per-trial CSVs")

    sub.add_parser("list-presets", help="list scenario names")
    return parser


def _parse_sweeps(items: Sequence[str]) -> dict[str, list[str]]:
    sweeps = {}
    for item in items:
        key, sep, values = item.partition("=")
        if not sep or not values:
            raise ConfigError(f"bad --sweep {item!r}: expected KEY=V1,V2,...")
        sweeps[key.strip().replace("-", "_")] = [v.strip() for v in values.split(",") if v.strip()]
    return sweeps


def _report(name: str, res) -> None:
    if res.rows:
        r = res.rows[-1]
        sig = "n/a" if r.sigma_mean is None else f"{r.sigma_mean:.3f}"
        log.info("%s: t=%d sigma=%s progress=%.3f migrations=%.1f", name, r.t, sig, r.progress_mean, r.migrations_mean)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(ns, "verbose", False) else logging.WARNING, format="%(message)s")

    if ns.command == "list-presets":
        for name, preset in PRESETS.items():
            print(f"{name:18s} {preset.description}")
        return 0

    try:
        if ns.command == "run":
            config = parse_config(ns)
            result = run_experiment(config, workers=ns.workers)
            out = write_outputs(result, Path(ns.out) / ns.name)
            if ns.dump_graph:
                from .engine import Simulation

                Simulation(config, result.seeds[0]).hosts.write_edge_list(out / "hosts.edges")
            _report(ns.name, result)
            print(out)
        else:
            overrides: dict[str, str] = {}
            if ns.config:
                overrides.update(read_config_file(ns.config))
            overrides.update(flag_values(ns))
            run_preset(
                ns.name,
                ns.out,
                overrides=overrides,
                sweeps=_parse_sweeps(ns.sweep),
                workers=ns.workers,
                trial_csv=ns.trial_csv,
                progress_cb=_report,
            )
            print(Path(ns.out) / ns.name)
    except (ConfigError, UnknownHostError) as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 2
    except (ModelViolation, ExperimentError) as exc:
        print(f"{parser.prog}: model violation: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
