"""Host overlay network: construction, churn events and hop distances.

The overlay is an undirected graph whose nodes are hosts.  Every host keeps
an ordered list of resident jobs; jobs that are travelling between hosts are
held in ``HostGraph.in_flight`` keyed by job with their destination host, so
each job is accounted for in exactly one place at any time.
"""

from __future__ import annotations

import math
import random
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .errors import ConfigError, ForbiddenExitError, ModelViolation, UnknownHostError

HostId = int
JobId = int

__all__ = [
    "HostGraph",
    "ChurnModel",
    "ScheduledEvent",
    "NetworkEvent",
    "attachment_count",
    "exit_probability",
    "build_host_network",
    "host_enter",
    "host_exit",
    "churn_tick",
]


def attachment_count(size: int) -> int:
    """Neighbours a host links to when it joins a network of ``size`` hosts.

    ``floor(log2(size))`` clamped to ``[1, size]``; zero for an empty network.
    """
    if size <= 0:
        return 0
    return min(max(size.bit_length() - 1, 1), size)


def exit_probability(tau: float) -> float:
    """Per-host, per-step exit probability for half-life ``tau``.

    Survival over ``tau`` steps is ``(1 - p) ** tau == 1/2``.
    """
    if math.isinf(tau):
        return 0.0
    return 1.0 - 2.0 ** (-1.0 / tau)


class HostGraph:
    """Mutable overlay graph plus the job placement it carries."""

    def __init__(self) -> None:
        self.adj: dict[HostId, set[HostId]] = {}
        self.jobs: dict[HostId, list[JobId]] = {}
        self.in_flight: dict[JobId, HostId] = {}
        self.location: dict[JobId, HostId] = {}
        # in-flight jobs per destination host
        self.inbound: dict[HostId, int] = {}
        self._next_id = 0
        self._bfs: dict[HostId, dict[HostId, int]] = {}
        self._domains: dict[tuple[HostId, int], list[HostId]] = {}

    # -- structure ---------------------------------------------------------

    def __len__(self) -> int:
        return len(self.adj)

    def __contains__(self, host: object) -> bool:
        return host in self.adj

    @property
    def hosts(self) -> list[HostId]:
        return list(self.adj)

    def neighbours(self, host: HostId) -> set[HostId]:
        try:
            return self.adj[host]
        except KeyError:
            raise UnknownHostError(host) from None

    def add_host(self, neighbours: Iterable[HostId] = ()) -> HostId:
        host = self._next_id
        self._next_id += 1
        self.adj[host] = set()
        self.jobs[host] = []
        for v in neighbours:
            self.add_edge(host, v)
        self._invalidate()
        return host

    def add_edge(self, u: HostId, v: HostId) -> None:
        if u == v:
            raise ValueError(f"self-loop on host {u}")
        self.neighbours(u).add(v)
        self.neighbours(v).add(u)
        self._invalidate()

    def remove_host(self, host: HostId) -> None:
        """Drop ``host`` and its edges.  Its resident list must be empty."""
        if self.jobs[host]:
            raise ValueError(f"host {host} still holds {len(self.jobs[host])} jobs")
        for v in self.adj.pop(host):
            self.adj[v].discard(host)
        del self.jobs[host]
        self._invalidate()

    def edges(self) -> list[tuple[HostId, HostId]]:
        return sorted((u, v) for u, nbrs in self.adj.items() for v in nbrs if u < v)

    def components(self) -> list[list[HostId]]:
        seen: set[HostId] = set()
        parts = []
        for start in self.adj:
            if start in seen:
                continue
            part = [start]
            seen.add(start)
            queue = deque([start])
            while queue:
                u = queue.popleft()
                for v in self.adj[u]:
                    if v not in seen:
                        seen.add(v)
                        part.append(v)
                        queue.append(v)
            parts.append(part)
        return parts

    def is_connected(self) -> bool:
        return len(self.components()) <= 1

    def check_symmetry(self) -> None:
        for u, nbrs in self.adj.items():
            if u in nbrs:
                raise AssertionError(f"self-loop on host {u}")
            for v in nbrs:
                if u not in self.adj[v]:
                    raise AssertionError(f"asymmetric edge {u}->{v}")

    def write_edge_list(self, path: str | Path) -> None:
        lines = [f"{u} {v}\n" for u, v in self.edges()]
        Path(path).write_text("".join(lines))

    # -- distances ---------------------------------------------------------

    def _invalidate(self) -> None:
        self._bfs.clear()
        self._domains.clear()

    def distances_from(self, source: HostId) -> dict[HostId, int]:
        """Hop distance from ``source`` to every reachable host (cached)."""
        dist = self._bfs.get(source)
        if dist is None:
            if source not in self.adj:
                raise UnknownHostError(source)
            dist = {source: 0}
            queue = deque([source])
            adj = self.adj
            while queue:
                u = queue.popleft()
                du = dist[u] + 1
                for v in adj[u]:
                    if v not in dist:
                        dist[v] = du
                        queue.append(v)
            self._bfs[source] = dist
        return dist

    def hop_distance(self, u: HostId, v: HostId) -> int:
        if v not in self.adj:
            raise UnknownHostError(v)
        try:
            return self.distances_from(u)[v]
        except KeyError:
            raise ModelViolation(f"hosts {u} and {v} are disconnected") from None

    def diameter(self) -> int:
        best = 0
        for u in self.adj:
            dist = self.distances_from(u)
            if len(dist) != len(self.adj):
                raise ModelViolation("host network is partitioned")
            best = max(best, max(dist.values()))
        return best

    def domain(self, center: HostId, radius: int) -> list[HostId]:
        """Hosts within ``radius`` hops of ``center``, the centre included."""
        key = (center, radius)
        dom = self._domains.get(key)
        if dom is None:
            if radius == 1:
                dom = [center, *self.neighbours(center)]
            else:
                # BFS order puts the centre first
                dom = [h for h, d in self.distances_from(center).items() if d <= radius]
            self._domains[key] = dom
        return dom

    # -- placement ---------------------------------------------------------

    def load(self, host: HostId) -> int:
        return len(self.jobs[host])

    def loads(self) -> list[int]:
        return [len(js) for js in self.jobs.values()]

    def committed_loads(self, hosts: list[HostId]) -> list[int]:
        """Resident plus inbound in-flight jobs: the load a balancer reasons about."""
        loads = list(map(len, map(self.jobs.__getitem__, hosts)))
        if self.inbound:
            inbound = self.inbound
            loads = [w + inbound.get(h, 0) for h, w in zip(hosts, loads)]
        return loads

    def place(self, job: JobId, host: HostId) -> None:
        self.jobs[host].append(job)
        self.location[job] = host

    def move(self, job: JobId, dest: HostId) -> None:
        """Relocate a resident job instantly."""
        self.jobs[self.location[job]].remove(job)
        self.place(job, dest)

    def depart(self, job: JobId, dest: HostId) -> None:
        """Take a resident job off its host; it is in flight towards ``dest``."""
        self.jobs[self.location[job]].remove(job)
        self._fly(job, dest)

    def _fly(self, job: JobId, dest: HostId) -> None:
        old = self.in_flight.get(job)
        if old is not None:
            self._unbook(old)
        self.in_flight[job] = dest
        self.location[job] = dest
        self.inbound[dest] = self.inbound.get(dest, 0) + 1

    def _unbook(self, dest: HostId) -> None:
        left = self.inbound[dest] - 1
        if left:
            self.inbound[dest] = left
        else:
            del self.inbound[dest]

    def arrive(self, job: JobId) -> HostId:
        dest = self.in_flight.pop(job)
        self._unbook(dest)
        self.place(job, dest)
        return dest

    def job_total(self) -> int:
        return sum(len(js) for js in self.jobs.values()) + len(self.in_flight)

    def check_conservation(self, n_jobs: int) -> None:
        """Every job 0..n_jobs-1 sits in exactly one resident list or flight record."""
        seen: dict[JobId, int] = {}
        for host, resident in self.jobs.items():
            for j in resident:
                seen[j] = seen.get(j, 0) + 1
                if self.location.get(j) != host:
                    raise AssertionError(f"job {j} on host {host} but located at {self.location.get(j)}")
        for j, dest in self.in_flight.items():
            seen[j] = seen.get(j, 0) + 1
            if dest not in self.adj:
                raise AssertionError(f"job {j} in flight to departed host {dest}")
        if sorted(seen) != list(range(n_jobs)) or any(c != 1 for c in seen.values()):
            raise AssertionError(f"job accounting broken: {len(seen)} distinct of {n_jobs}")
        booked: dict[HostId, int] = {}
        for dest in self.in_flight.values():
            booked[dest] = booked.get(dest, 0) + 1
        if booked != self.inbound:
            raise AssertionError(f"inbound counts {self.inbound} disagree with flights {booked}")


@dataclass(frozen=True)
class ScheduledEvent:
    time: int
    kind: str  # "exit" or "enter"
    host: Optional[HostId] = None  # exit target; None picks uniformly at random

    def __post_init__(self) -> None:
        if self.kind not in ("exit", "enter"):
            raise ConfigError(f"unknown event kind {self.kind!r}")
        if self.time < 0:
            raise ConfigError(f"event time must be >= 0, got {self.time}")
        if self.kind == "enter" and self.host is not None:
            raise ConfigError("enter events take no host id")

    @classmethod
    def parse(cls, text: str) -> "ScheduledEvent":
        """Parse ``exit@<t>``, ``exit@<t>:<host>`` or ``enter@<t>``."""
        try:
            kind, rest = text.strip().split("@", 1)
            host = None
            if ":" in rest:
                rest, host_text = rest.split(":", 1)
                host = int(host_text)
            return cls(int(rest), kind, host)
        except ValueError as exc:
            raise ConfigError(f"bad event {text!r}: expected exit@<t> or enter@<t>") from exc

    def __str__(self) -> str:
        suffix = "" if self.host is None else f":{self.host}"
        return f"{self.kind}@{self.time}{suffix}"


@dataclass(frozen=True)
class ChurnModel:
    tau: float = math.inf
    events: tuple[ScheduledEvent, ...] = ()

    def __post_init__(self) -> None:
        if not (self.tau > 0):
            raise ConfigError(f"half-life must be positive, got {self.tau}")
        times = [e.time for e in self.events]
        if times != sorted(times):
            raise ConfigError("scheduled events must be ordered by time")

    @property
    def static(self) -> bool:
        return math.isinf(self.tau) and not self.events


@dataclass
class NetworkEvent:
    time: int
    kind: str
    host: HostId
    scripted: bool
    handoff: list[tuple[JobId, HostId]] = field(default_factory=list)


def build_host_network(n: int, rng: random.Random) -> HostGraph:
    """Grow a connected overlay of ``n`` hosts by repeated random attachment."""
    if n < 2:
        raise ConfigError(f"host network needs at least 2 hosts, got {n}")
    g = HostGraph()
    g.add_host()
    for _ in range(n - 1):
        host_enter(g, rng)
    return g


def host_enter(g: HostGraph, rng: random.Random) -> HostId:
    existing = list(g.adj)
    k = attachment_count(len(existing))
    return g.add_host(rng.sample(existing, k))


def host_exit(g: HostGraph, u: HostId, rng: random.Random) -> list[tuple[JobId, HostId]]:
    """Remove ``u``, handing its jobs round-robin to a shuffled list of its neighbours.

    Jobs in flight towards ``u`` are redirected the same way.  If removing
    ``u`` would split the overlay, the former neighbours left in separate
    pieces are linked back to the largest piece, so no partition ever forms.
    Hand-offs are not migrations and carry no cost.
    """
    if u not in g.adj:
        raise UnknownHostError(u)
    if len(g.adj) == 1:
        raise ForbiddenExitError(f"host {u} is the last host in the network")
    targets = sorted(g.adj[u])
    rng.shuffle(targets)
    if not targets:
        raise ModelViolation(f"host {u} has no neighbours to hand its jobs to")

    incoming = sorted(j for j, dest in g.in_flight.items() if dest == u)
    handoff = []
    resident = list(g.jobs[u])
    g.jobs[u].clear()
    for idx, job in enumerate(resident + incoming):
        dest = targets[idx % len(targets)]
        if idx < len(resident):
            g.place(job, dest)
        else:
            g._fly(job, dest)
        handoff.append((job, dest))

    g.remove_host(u)
    _repair(g, targets, rng)
    return handoff


def _repair(g: HostGraph, former: list[HostId], rng: random.Random) -> None:
    parts = g.components()
    if len(parts) <= 1:
        return
    parts.sort(key=len, reverse=True)
    main = parts[0]
    main_set = set(main)
    anchors = [h for h in former if h in main_set]
    for part in parts[1:]:
        part_set = set(part)
        local = [h for h in former if h in part_set]
        g.add_edge(rng.choice(local), rng.choice(anchors))


def churn_tick(g: HostGraph, model: ChurnModel, t: int, rng: random.Random) -> list[NetworkEvent]:
    """Apply scheduled events for step ``t``, then paired stochastic exit/enter."""
    applied = []
    for ev in model.events:
        if ev.time != t:
            continue
        if ev.kind == "enter":
            applied.append(NetworkEvent(t, "enter", host_enter(g, rng), True))
        else:
            target = ev.host if ev.host is not None else rng.choice(sorted(g.adj))
            handoff = host_exit(g, target, rng)
            applied.append(NetworkEvent(t, "exit", target, True, handoff))

    p = exit_probability(model.tau)
    if p > 0.0:
        leaving = [h for h in list(g.adj) if rng.random() < p]
        for host in leaving:
            if host not in g.adj or len(g.adj) < 2:
                continue
            handoff = host_exit(g, host, rng)
            applied.append(NetworkEvent(t, "exit", host, False, handoff))
            applied.append(NetworkEvent(t, "enter", host_enter(g, rng), False))
    return applied
