"""Trial loop and multi-trial experiment harness.

Each time step applies, in order: churn, one balancing round, one unit of
application time, then a metrics sample.  A sample is labelled with the
elapsed time after its step, so a run of ``steps`` steps yields samples
``t = 1 .. steps``.
"""

from __future__ import annotations

import logging
import math
import random
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Optional, Sequence

from . import __version__
from .application import AppParams, Application, build_guest_graph
from .balancing import MigrationOrder, Selection, Strategy, balancing_round
from .errors import ConfigError, ExperimentError, ModelViolation
from .metrics import (
    AggregateRow,
    MetricsSample,
    aggregate,
    migrations_total,
    progress,
    sigma,
    write_aggregate_csv,
    write_trials_csv,
)
from .topology import ChurnModel, HostGraph, NetworkEvent, ScheduledEvent, build_host_network, churn_tick

__all__ = [
    "SimConfig",
    "TrialResult",
    "ExperimentResult",
    "Simulation",
    "derive_seed",
    "run_trial",
    "run_experiment",
    "write_outputs",
]

log = logging.getLogger(__name__)

PLACEMENTS = ("single_host", "uniform_random", "balanced")
_MASK64 = (1 << 64) - 1


def derive_seed(master_seed: int, trial: int) -> int:
    """SplitMix64 finaliser of ``master_seed * 2**32 + trial``; stable across platforms."""
    z = ((master_seed << 32) + trial + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class SimConfig:
    n_hosts: int = 31
    n_jobs: int = 31
    guest: str = "grid"
    strategy: Strategy = field(default_factory=lambda: Strategy("pm", p=0.35))
    selection: Selection = Selection.NONE
    iter_work: float = 10.0
    gamma: float = 0.0
    migration_cost: int = 0
    tau: float = math.inf
    events: tuple[ScheduledEvent, ...] = ()
    steps: int = 500
    trials: int = 50
    seed: int = 0
    progress_norm: str = "verbatim"
    placement: str = "single_host"
    cadence: int = 1

    def __post_init__(self) -> None:
        if self.n_hosts < 2:
            raise ConfigError(f"hosts: need at least 2, got {self.n_hosts}")
        if self.n_jobs < 1:
            raise ConfigError(f"jobs: need at least 1, got {self.n_jobs}")
        if self.steps < 0:
            raise ConfigError(f"steps: must be >= 0, got {self.steps}")
        if self.trials < 1:
            raise ConfigError(f"trials: must be >= 1, got {self.trials}")
        if self.seed < 0:
            raise ConfigError(f"seed: must be >= 0, got {self.seed}")
        if self.progress_norm not in ("verbatim", "mean"):
            raise ConfigError(f"progress_norm: expected verbatim or mean, got {self.progress_norm!r}")
        if self.placement not in PLACEMENTS:
            raise ConfigError(f"placement: expected one of {', '.join(PLACEMENTS)}, got {self.placement!r}")
        if self.cadence < 1:
            raise ConfigError(f"cadence: must be >= 1, got {self.cadence}")
        # range checks owned by the other modules
        self.app_params()
        self.churn_model()

    def app_params(self) -> AppParams:
        return AppParams(self.iter_work, self.gamma, self.migration_cost, self.steps)

    def churn_model(self) -> ChurnModel:
        return ChurnModel(self.tau, self.events)

    # -- flat key=value form (config files and manifests) ---------------------

    def to_mapping(self) -> dict[str, str]:
        return {
            "hosts": str(self.n_hosts),
            "jobs": str(self.n_jobs),
            "guest": self.guest,
            "strategy": str(self.strategy),
            "select": self.selection.value,
            "iter_work": repr(self.iter_work),
            "gamma": repr(self.gamma),
            "migration_cost": str(self.migration_cost),
            "tau": "inf" if math.isinf(self.tau) else repr(self.tau),
            "event": ",".join(str(e) for e in self.events),
            "steps": str(self.steps),
            "trials": str(self.trials),
            "seed": str(self.seed),
            "progress_norm": self.progress_norm,
            "placement": self.placement,
            "cadence": str(self.cadence),
        }

    def to_text(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in self.to_mapping().items())

    def updated(self, values: Mapping[str, str]) -> "SimConfig":
        """Return a copy with string-valued ``key=value`` overrides applied."""
        changes = {}
        for key, raw in values.items():
            if key not in _KEYS:
                raise ConfigError(f"unknown config key {key!r}")
            attr, conv = _KEYS[key]
            try:
                changes[attr] = conv(raw)
            except ConfigError as exc:
                raise ConfigError(f"{key}: {exc}") from None
            except ValueError:
                raise ConfigError(f"{key}: cannot parse {raw!r}") from None
        try:
            return replace(self, **changes)
        except ConfigError as exc:
            raise ConfigError(str(exc)) from None


def _parse_tau(text: str) -> float:
    text = text.strip().lower()
    if text in ("inf", "infinite", "infinity", "static"):
        return math.inf
    value = float(text)
    if not value > 0:
        raise ConfigError(f"half-life must be positive or inf, got {text!r}")
    return value


def _parse_events(text: str) -> tuple[ScheduledEvent, ...]:
    parts = [p for p in text.replace(";", ",").split(",") if p.strip()]
    events = [ScheduledEvent.parse(p) for p in parts]
    return tuple(sorted(events, key=lambda e: e.time))


_KEYS = {
    "hosts": ("n_hosts", int),
    "jobs": ("n_jobs", int),
    "guest": ("guest", str.strip),
    "strategy": ("strategy", Strategy.parse),
    "select": ("selection", Selection.parse),
    "iter_work": ("iter_work", float),
    "gamma": ("gamma", float),
    "migration_cost": ("migration_cost", int),
    "tau": ("tau", _parse_tau),
    "event": ("events", _parse_events),
    "steps": ("steps", int),
    "trials": ("trials", int),
    "seed": ("seed", int),
    "progress_norm": ("progress_norm", str.strip),
    "placement": ("placement", str.strip),
    "cadence": ("cadence", int),
}


@dataclass
class TrialResult:
    seed: int
    samples: list[MetricsSample]
    placement: dict[int, int]
    n_hosts: int
    n_edges: int
    orders: Optional[list[MigrationOrder]] = None
    events: list[NetworkEvent] = field(default_factory=list)


class Simulation:
    """One trial, steppable.  All randomness comes from ``random.Random(seed)``."""

    def __init__(self, config: SimConfig, seed: int, record_orders: bool = False):
        self.config = config
        self.seed = seed
        self.rng = rng = random.Random(seed)
        self.hosts: HostGraph = build_host_network(config.n_hosts, rng)
        guest = build_guest_graph(config.n_jobs, config.guest, rng)
        self.app = Application(guest, config.app_params())
        self.churn = config.churn_model()
        self.counter: Counter = Counter()
        self.samples: list[MetricsSample] = []
        self.orders: Optional[list[MigrationOrder]] = [] if record_orders else None
        self.events: list[NetworkEvent] = []
        self.t = 0
        self._place()

    def _place(self) -> None:
        hosts = sorted(self.hosts.adj)
        n_jobs = self.config.n_jobs
        if self.config.placement == "single_host":
            home = self.rng.choice(hosts)
            for j in range(n_jobs):
                self.hosts.place(j, home)
        elif self.config.placement == "uniform_random":
            for j in range(n_jobs):
                self.hosts.place(j, self.rng.choice(hosts))
        else:
            for j in range(n_jobs):
                self.hosts.place(j, hosts[j % len(hosts)])

    @property
    def migrations(self) -> int:
        return migrations_total(self.counter)

    def step(self) -> MetricsSample:
        cfg = self.config
        t = self.t
        if not self.churn.static:
            self.events.extend(churn_tick(self.hosts, self.churn, t, self.rng))
        if t % cfg.cadence == 0:
            orders = balancing_round(
                self.hosts, self.app, cfg.strategy, cfg.selection, t, self.rng, self.counter
            )
            if self.orders is not None:
                self.orders.extend(orders)
        self.app.advance(self.hosts)
        self.t = t + 1
        sample = MetricsSample(
            self.t,
            sigma(self.hosts.loads()),
            progress(self.app.iterations(), cfg.progress_norm),
            self.migrations,
        )
        self.samples.append(sample)
        return sample

    def result(self) -> TrialResult:
        return TrialResult(
            seed=self.seed,
            samples=self.samples,
            placement=dict(sorted(self.hosts.location.items())),
            n_hosts=len(self.hosts),
            n_edges=len(self.hosts.edges()),
            orders=self.orders,
            events=self.events,
        )

    def run(self) -> TrialResult:
        while self.t < self.config.steps:
            self.step()
        self.app.end()
        return self.result()


def run_trial(config: SimConfig, seed: int, record_orders: bool = False) -> TrialResult:
    return Simulation(config, seed, record_orders).run()


@dataclass
class ExperimentResult:
    config: SimConfig
    seeds: list[int]
    trials: list[TrialResult]
    rows: list[AggregateRow]

    def final(self) -> AggregateRow:
        return self.rows[-1]


def _run_indexed(args: tuple[SimConfig, int, int]) -> TrialResult:
    config, index, seed = args
    try:
        return run_trial(config, seed)
    except ModelViolation as exc:
        raise ExperimentError(index, seed, exc) from exc


def run_experiment(config: SimConfig, workers: int = 1) -> ExperimentResult:
    """Run ``config.trials`` independent trials and aggregate them by trial index."""
    if config.n_jobs == 1 and config.progress_norm == "verbatim":
        log.warning("progress: |G| = 1 makes 1/(|G|-1) undefined; reporting the single job's count")
    seeds = [derive_seed(config.seed, i) for i in range(config.trials)]
    jobs = [(config, i, s) for i, s in enumerate(seeds)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            trials = list(pool.map(_run_indexed, jobs))
    else:
        trials = [_run_indexed(j) for j in jobs]
    rows = aggregate([tr.samples for tr in trials])
    return ExperimentResult(config, seeds, trials, rows)


def write_manifest(path: str | Path, config: SimConfig, seeds: Sequence[int]) -> None:
    lines = [
        f"# p2pbalance {__version__} run manifest; rerun with --config <this file>\n",
        f"# master seed {config.seed}; trial seeds derived with derive_seed(seed, i)\n",
        config.to_text(),
        "# derived trial seeds\n",
    ]
    lines += [f"# trial {i}: {s}\n" for i, s in enumerate(seeds)]
    Path(path).write_text("".join(lines))


def write_outputs(result: ExperimentResult, outdir: str | Path) -> Path:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    write_trials_csv(out / "trials.csv", [tr.samples for tr in result.trials])
    write_aggregate_csv(out / "aggregate.csv", result.rows)
    write_manifest(out / "manifest.txt", result.config, result.seeds)
    return out
