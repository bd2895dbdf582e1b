"""Loosely-synchronous application: guest graph and job lifecycle.

Each job repeatedly performs ``iter_work`` units of work, then waits at a
synchronisation point until every guest-graph neighbour has reached the
same point.  Hosts share their CPU equally among their *running* jobs.
"""

from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass, field

import networkx as nx

from .errors import ConfigError
from .topology import HostGraph, JobId

__all__ = [
    "Phase",
    "JobState",
    "AppParams",
    "GuestGraph",
    "Application",
    "build_guest_graph",
    "grid_shape",
]

# slack for accumulated 1/k shares, e.g. thirty thirds summing to 9.999...
WORK_EPS = 1e-9


class Phase(enum.IntEnum):
    RUNNING = 0
    SYNCHRONIZING = 1
    BLOCKED = 2
    MIGRATING = 3
    ENDED = 4


@dataclass(slots=True)
class JobState:
    phase: Phase = Phase.RUNNING
    work_done: float = 0.0
    iteration: int = 0
    sync_timer: float = 0.0
    migrate_timer: int = 0
    resume_phase: Phase = Phase.RUNNING

    @property
    def sync_ready_iteration(self) -> int:
        # the counter is bumped on entering a sync point, so it doubles as
        # the highest sync point reached
        return self.iteration


@dataclass(frozen=True)
class AppParams:
    iter_work: float = 10.0
    gamma: float = 0.0
    migration_cost: int = 0
    end_time: int = 500

    def __post_init__(self) -> None:
        if not self.iter_work > 0:
            raise ConfigError(f"iter_work must be > 0, got {self.iter_work}")
        if self.gamma < 0:
            raise ConfigError(f"gamma must be >= 0, got {self.gamma}")
        if self.migration_cost < 0:
            raise ConfigError(f"migration_cost must be >= 0, got {self.migration_cost}")
        if self.end_time < 0:
            raise ConfigError(f"end_time must be >= 0, got {self.end_time}")


@dataclass(frozen=True)
class GuestGraph:
    kind: str
    neighbours: tuple[tuple[JobId, ...], ...]

    def __len__(self) -> int:
        return len(self.neighbours)

    def edges(self) -> list[tuple[JobId, JobId]]:
        return [(i, j) for i, nbrs in enumerate(self.neighbours) for j in nbrs if i < j]


def grid_shape(m: int) -> tuple[int, int]:
    """Most square ``rows x cols`` factorisation of ``m`` (rows <= cols)."""
    rows = math.isqrt(m)
    while m % rows:
        rows -= 1
    return rows, m // rows


def build_guest_graph(m: int, kind: str, rng: random.Random) -> GuestGraph:
    """Build the synchronisation graph of ``m`` jobs.

    ``kind`` is ``ring``, ``grid`` (non-periodic 4-neighbour mesh) or
    ``regular:<d>`` (uniform random d-regular graph).
    """
    if m < 1:
        raise ConfigError(f"need at least one job, got {m}")
    adj: list[set[int]] = [set() for _ in range(m)]

    if kind == "ring":
        if m == 2:
            adj[0].add(1)
            adj[1].add(0)
        elif m > 2:
            for i in range(m):
                adj[i].update(((i - 1) % m, (i + 1) % m))
    elif kind in ("grid", "grid2d"):
        rows, cols = grid_shape(m)
        for r in range(rows):
            for c in range(cols):
                i = r * cols + c
                if c + 1 < cols:
                    adj[i].add(i + 1)
                    adj[i + 1].add(i)
                if r + 1 < rows:
                    adj[i].add(i + cols)
                    adj[i + cols].add(i)
    elif kind.startswith("regular:"):
        try:
            d = int(kind.split(":", 1)[1])
        except ValueError:
            raise ConfigError(f"bad guest topology {kind!r}") from None
        if d < 0 or d >= m or (m * d) % 2:
            raise ConfigError(f"no {d}-regular graph on {m} jobs")
        g = nx.random_regular_graph(d, m, seed=rng.randrange(2**32))
        for i, j in g.edges():
            adj[i].add(j)
            adj[j].add(i)
    else:
        raise ConfigError(f"unknown guest topology {kind!r}")

    return GuestGraph(kind, tuple(tuple(sorted(a)) for a in adj))


@dataclass
class Application:
    guest: GuestGraph
    params: AppParams
    states: list[JobState] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.states:
            self.states = [JobState() for _ in range(len(self.guest))]

    def iterations(self) -> list[int]:
        return [s.iteration for s in self.states]

    def sync_time(self, job: JobId, hosts: HostGraph) -> float:
        """Latency to synchronise ``job``: gamma times its farthest neighbour's hop distance."""
        nbrs = self.guest.neighbours[job]
        if not nbrs or self.params.gamma == 0:
            return 0.0
        loc = hosts.location
        dist = hosts.distances_from(loc[job])
        return self.params.gamma * max(dist[loc[j]] for j in nbrs)

    def advance(self, hosts: HostGraph) -> None:
        """Advance every job by one time unit.

        Work phase, then synchronisation bookkeeping, then migration timers.
        Jobs reaching their sync point in this step do not count down their
        latency until the next step.
        """
        states = self.states
        nbr_table = self.guest.neighbours
        goal = self.params.iter_work - WORK_EPS
        running_phase = Phase.RUNNING

        fresh = []
        for resident in hosts.jobs.values():
            running = [j for j in resident if states[j].phase is running_phase]
            if not running:
                continue
            share = 1.0 / len(running)
            for j in running:
                s = states[j]
                s.work_done += share
                if s.work_done >= goal:
                    s.work_done = 0.0
                    s.iteration += 1
                    if nbr_table[j]:
                        s.phase = Phase.SYNCHRONIZING
                        s.sync_timer = self.sync_time(j, hosts)
                        fresh.append(j)

        fresh_set = set(fresh)
        waiting = [j for j, s in enumerate(states) if s.phase in (Phase.SYNCHRONIZING, Phase.BLOCKED)]
        for j in waiting:
            s = states[j]
            if s.sync_timer > 0 and j not in fresh_set:
                s.sync_timer = max(s.sync_timer - 1.0, 0.0)
            if s.sync_timer > 0:
                continue
            k = s.iteration
            if all(
                states[n].iteration >= k and states[n].phase is not Phase.MIGRATING
                for n in nbr_table[j]
            ):
                s.phase = running_phase
            else:
                s.phase = Phase.BLOCKED

        if hosts.in_flight:
            for j in list(hosts.in_flight):
                s = states[j]
                s.migrate_timer -= 1
                if s.migrate_timer <= 0:
                    s.migrate_timer = 0
                    hosts.arrive(j)
                    s.phase = s.resume_phase

    def end(self) -> None:
        for s in self.states:
            s.phase = Phase.ENDED
