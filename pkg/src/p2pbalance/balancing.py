"""Diffusive balancing strategies and job selection.

Three strategies decide *how many* jobs move between which pair of hosts:

* ``en:<x>``  extended neighbour over the radius-``x`` domain of the centre,
* ``dasud``   moves between the extreme hosts of the centre's closed neighbourhood,
* ``pm:<p>``  ``en:1`` plus a unit over-migration with probability ``p``.

A selection policy then picks *which* resident job each order moves.
"""

from __future__ import annotations

import enum
import random
from collections import Counter
from dataclasses import dataclass
from typing import Optional

from .application import Application, Phase
from .errors import ConfigError
from .topology import HostGraph, HostId, JobId

__all__ = [
    "Strategy",
    "Selection",
    "Batch",
    "MigrationOrder",
    "en_step",
    "dasud_step",
    "pm_step",
    "edge_cut",
    "total_distance",
    "distance_change",
    "select_job",
    "apply_migration",
    "balancing_round",
]


@dataclass(frozen=True)
class Strategy:
    kind: str
    radius: int = 1
    p: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ("en", "dasud", "pm"):
            raise ConfigError(f"unknown strategy {self.kind!r}")
        if self.kind == "en" and self.radius < 1:
            raise ConfigError(f"EN radius must be >= 1, got {self.radius}")
        if self.kind == "pm" and not 0.0 <= self.p <= 1.0:
            raise ConfigError(f"PM probability must lie in [0, 1], got {self.p}")

    @classmethod
    def parse(cls, text: str) -> "Strategy":
        name, _, arg = text.strip().lower().partition(":")
        try:
            if name == "en":
                return cls("en", radius=int(arg))
            if name == "pm":
                return cls("pm", p=float(arg))
        except ValueError:
            raise ConfigError(f"bad strategy {text!r}") from None
        if name == "dasud" and not arg:
            return cls("dasud")
        raise ConfigError(f"bad strategy {text!r}: expected en:<x>, dasud or pm:<p>")

    def __str__(self) -> str:
        if self.kind == "en":
            return f"en:{self.radius}"
        if self.kind == "pm":
            return f"pm:{self.p:g}"
        return "dasud"


class Selection(enum.Enum):
    NONE = "none"
    EDGECUT = "edgecut"
    MINDIST = "mindist"

    @classmethod
    def parse(cls, text: str) -> "Selection":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise ConfigError(f"bad selection {text!r}: expected none, edgecut or mindist") from None


@dataclass(frozen=True)
class Batch:
    """``count`` jobs to move from ``source`` to ``dest``."""

    source: HostId
    dest: HostId
    count: int


@dataclass(frozen=True)
class MigrationOrder:
    job: JobId
    source: HostId
    dest: HostId
    issued_at: int

    def __str__(self) -> str:
        return f"{self.issued_at} {self.job} {self.source} {self.dest}"


def _pick(candidates: list[HostId], rng: random.Random) -> HostId:
    if len(candidates) == 1:
        return candidates[0]
    return rng.choice(candidates)


def _push_or_pull(i: HostId, dom: list[HostId], loads: list[int], rng: random.Random) -> Optional[Batch]:
    lo = min(loads)
    li = loads[0]  # domains list their centre first
    # tie-breaks are drawn only once a move is certain
    if li - lo >= 2:
        j = _pick([h for h, w in zip(dom, loads) if w == lo], rng)
        return Batch(i, j, (li - lo) // 2)
    if li == lo:
        hi = max(loads)
        if hi - li >= 2:
            k = _pick([h for h, w in zip(dom, loads) if w == hi], rng)
            return Batch(k, i, (hi - li) // 2)
    return None


def en_step(g: HostGraph, i: HostId, x: int, rng: random.Random) -> Optional[Batch]:
    dom = g.domain(i, x)
    if len(dom) < 2:
        return None
    return _push_or_pull(i, dom, g.committed_loads(dom), rng)


def dasud_step(g: HostGraph, i: HostId, rng: random.Random) -> Optional[Batch]:
    dom = g.domain(i, 1)
    if len(dom) < 2:
        return None
    loads = g.committed_loads(dom)
    lo, hi = min(loads), max(loads)
    if hi - lo < 2:
        return None
    a = _pick([h for h, w in zip(dom, loads) if w == hi], rng)
    b = _pick([h for h, w in zip(dom, loads) if w == lo], rng)
    return Batch(a, b, (hi - lo) // 2)


def pm_step(g: HostGraph, i: HostId, p: float, rng: random.Random) -> Optional[Batch]:
    """``en:1``, or else move one job to a neighbour holding exactly one job less.

    The over-migration branch draws no randomness when ``p == 0``, so
    ``pm:0`` consumes the random stream exactly like ``en:1``.
    """
    dom = g.domain(i, 1)
    if len(dom) < 2:
        return None
    loads = g.committed_loads(dom)
    batch = _push_or_pull(i, dom, loads, rng)
    if batch is not None or p <= 0.0:
        return batch
    wi = loads[0]
    lo = min(loads[1:])
    if wi - lo == 1 and (p >= 1.0 or rng.random() < p):
        j = _pick([h for h, w in zip(dom[1:], loads[1:]) if w == lo], rng)
        return Batch(i, j, 1)
    return None


def edge_cut(app: Application, g: HostGraph, job: JobId, dest: HostId) -> int:
    """Guest neighbours of ``job`` that would not share ``dest`` with it."""
    loc = g.location
    return sum(1 for n in app.guest.neighbours[job] if loc[n] != dest)


def total_distance(app: Application, g: HostGraph, job: JobId, dest: HostId) -> int:
    """Summed hop distance from ``dest`` to the hosts of ``job``'s guest neighbours."""
    loc = g.location
    nbrs = app.guest.neighbours[job]
    if not nbrs:
        return 0
    dist = g.distances_from(dest)
    return sum(dist[loc[n]] for n in nbrs)


def distance_change(app: Application, g: HostGraph, job: JobId, dest: HostId) -> int:
    """Change in summed neighbour distance if ``job`` moved from its host to ``dest``.

    Negative means the move brings the job closer to its guest neighbours.
    """
    if not app.guest.neighbours[job]:
        return 0
    return total_distance(app, g, job, dest) - total_distance(app, g, job, g.location[job])


def select_job(
    policy: Selection,
    source: HostId,
    dest: HostId,
    g: HostGraph,
    app: Application,
    rng: random.Random,
    exclude: set[JobId] | frozenset[JobId] = frozenset(),
) -> Optional[JobId]:
    """Choose the resident job of ``source`` to move to ``dest``; None if none is eligible."""
    eligible = [j for j in g.jobs[source] if j not in exclude]
    if not eligible:
        return None
    if policy is Selection.NONE:
        return eligible[0] if len(eligible) == 1 else rng.choice(eligible)
    score = edge_cut if policy is Selection.EDGECUT else distance_change
    scores = [score(app, g, j, dest) for j in eligible]
    best = min(scores)
    return _pick([j for j, s in zip(eligible, scores) if s == best], rng)


def apply_migration(
    order: MigrationOrder,
    g: HostGraph,
    app: Application,
    cost: int,
    counter: Counter,
) -> None:
    """Move ``order.job``; with ``cost > 0`` it spends ``cost`` steps in flight."""
    if cost == 0:
        g.move(order.job, order.dest)
    else:
        s = app.states[order.job]
        g.depart(order.job, order.dest)
        s.resume_phase = s.phase
        s.phase = Phase.MIGRATING
        s.migrate_timer = cost
    counter[order.source] += 1


def balancing_round(
    g: HostGraph,
    app: Application,
    strategy: Strategy,
    selection: Selection,
    t: int,
    rng: random.Random,
    counter: Counter,
) -> list[MigrationOrder]:
    """Let every host act as centre once, in random order, reading loads live."""
    order = list(g.adj)
    rng.shuffle(order)
    cost = app.params.migration_cost
    moved: set[JobId] = set()
    issued = []
    kind = strategy.kind
    for centre in order:
        if kind == "en":
            batch = en_step(g, centre, strategy.radius, rng)
        elif kind == "dasud":
            batch = dasud_step(g, centre, rng)
        else:
            batch = pm_step(g, centre, strategy.p, rng)
        if batch is None:
            continue
        for _ in range(batch.count):
            job = select_job(selection, batch.source, batch.dest, g, app, rng, moved)
            if job is None:
                break
            mo = MigrationOrder(job, batch.source, batch.dest, t)
            apply_migration(mo, g, app, cost, counter)
            moved.add(job)
            issued.append(mo)
    return issued
