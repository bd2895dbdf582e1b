"""Load imbalance, application progress and migration counts."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence


__all__ = [
    "MetricsSample",
    "AggregateRow",
    "sigma",
    "progress",
    "migrations_total",
    "theoretical_optimal_progress",
    "aggregate",
    "write_trials_csv",
    "write_aggregate_csv",
    "TRIAL_HEADER",
    "AGGREGATE_HEADER",
]

TRIAL_HEADER = ("trial", "t", "sigma", "progress", "migrations")
AGGREGATE_HEADER = (
    "t",
    "sigma_mean",
    "sigma_se",
    "progress_mean",
    "progress_se",
    "migrations_mean",
    "migrations_se",
)


@dataclass(frozen=True)
class MetricsSample:
    t: int
    sigma: Optional[float]
    progress: float
    migrations: int


@dataclass(frozen=True)
class AggregateRow:
    t: int
    sigma_mean: Optional[float]
    sigma_se: Optional[float]
    progress_mean: float
    progress_se: float
    migrations_mean: float
    migrations_se: float


def sigma(loads: Sequence[int]) -> Optional[float]:
    """Sample standard deviation of host loads; None for fewer than two hosts."""
    n = len(loads)
    if n < 2:
        return None
    mean = sum(loads) / n
    return math.sqrt(sum((w - mean) ** 2 for w in loads) / (n - 1))


def progress(iterations: Sequence[int], norm: str = "verbatim") -> float:
    """Summed sync-point entries scaled by ``1/(|G|-1)``, or ``1/|G|`` with ``norm="mean"``."""
    m = len(iterations)
    if m == 0:
        return 0.0
    if norm == "verbatim":
        if m == 1:
            # 1/(|G|-1) is undefined; the engine warns once per experiment
            return float(iterations[0])
        return sum(iterations) / (m - 1)
    if norm == "mean":
        return sum(iterations) / m
    raise ValueError(f"unknown progress norm {norm!r}")


def migrations_total(per_host: Mapping[object, int]) -> int:
    return sum(per_host.values())


def theoretical_optimal_progress(t: float, g_size: int, h_size: int, iter_work: float) -> float:
    """Progress of a perfectly divisible load: ``t/R`` slowed by ``|H|/|G|`` once jobs outnumber hosts."""
    if g_size < 1 or h_size < 1:
        raise ValueError("sizes must be >= 1")
    return (t / iter_work) * min(1.0, h_size / g_size)


def _mean_se(values: list[float]) -> tuple[float, float]:
    n = len(values)
    mean = sum(values) / n
    if n < 2:
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var / n)


def aggregate(series: Sequence[Sequence[MetricsSample]]) -> list[AggregateRow]:
    """Per-step mean and standard error across trials (trials must share a horizon)."""
    if not series:
        return []
    length = len(series[0])
    if any(len(s) != length for s in series):
        raise ValueError("trials have different lengths")
    rows = []
    for k in range(length):
        column = [s[k] for s in series]
        sig = [c.sigma for c in column if c.sigma is not None]
        s_mean, s_se = _mean_se(sig) if sig else (None, None)
        p_mean, p_se = _mean_se([c.progress for c in column])
        m_mean, m_se = _mean_se([float(c.migrations) for c in column])
        rows.append(AggregateRow(column[0].t, s_mean, s_se, p_mean, p_se, m_mean, m_se))
    return rows


def _fmt(x: Optional[float]) -> str:
    return "" if x is None else f"{x:.6f}"


def write_trials_csv(path: str | Path, series: Iterable[Sequence[MetricsSample]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRIAL_HEADER)
        for trial, samples in enumerate(series):
            for s in samples:
                w.writerow((trial, s.t, _fmt(s.sigma), _fmt(s.progress), s.migrations))


def write_aggregate_csv(path: str | Path, rows: Iterable[AggregateRow]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(AGGREGATE_HEADER)
        for r in rows:
            w.writerow(
                (
                    r.t,
                    _fmt(r.sigma_mean),
                    _fmt(r.sigma_se),
                    _fmt(r.progress_mean),
                    _fmt(r.progress_se),
                    _fmt(r.migrations_mean),
                    _fmt(r.migrations_se),
                )
            )
