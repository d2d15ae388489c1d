"""Normalized advantages for the external trainer.

Task-relative mode keeps separate mean/std baselines for each of the six
(task type, role) groups; global mode normalizes over the undivided
batch for variance comparisons. Population standard deviation with an
epsilon guard; degenerate groups emit 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .types import Role, RolloutRecord, TaskType

EPSILON = 1e-8


@dataclass(frozen=True)
class BaselineStats:
    group: tuple[TaskType, Role]
    mean: float
    std: float
    count: int


def _population_stats(values: list[float]) -> tuple[float, float]:
    n = len(values)
    mean = sum(values) / n
    variance = sum((v - mean) ** 2 for v in values) / n
    return mean, math.sqrt(variance)


def _normalize(records: list[RolloutRecord]) -> None:
    if not records:
        return
    if len(records) == 1:
        records[0].advantage = 0.0
        return
    mean, std = _population_stats([r.reward for r in records])
    if std <= EPSILON:
        for record in records:
            record.advantage = 0.0
        return
    for record in records:
        record.advantage = (record.reward - mean) / (std + EPSILON)


def compute_trr(records: list[RolloutRecord]) -> list[BaselineStats]:
    """Fill advantages per (task type, role) group; returns the baselines."""
    groups: dict[tuple[TaskType, Role], list[RolloutRecord]] = {}
    for record in records:
        groups.setdefault((record.task_type, record.role), []).append(record)
    stats = []
    for group_key in sorted(groups, key=lambda g: (g[0].value, g[1].value)):
        members = groups[group_key]
        _normalize(members)
        mean, std = _population_stats([r.reward for r in members])
        stats.append(BaselineStats(group_key, mean, std, len(members)))
    return stats


def compute_global_baseline(records: list[RolloutRecord]) -> list[BaselineStats]:
    """Same normalization over the whole batch (comparison mode)."""
    _normalize(records)
    if not records:
        return []
    mean, std = _population_stats([r.reward for r in records])
    return [
        BaselineStats((record.task_type, record.role), mean, std, len(records))
        for record in records[:1]
    ]


class RunningBaselines:
    """Cross-iteration baselines, kept behind a flag.

    Accumulates per-group mean/variance with Welford updates and
    normalizes new records against the running statistics instead of the
    current batch's.
    """

    def __init__(self) -> None:
        self._state: dict[tuple[TaskType, Role], tuple[int, float, float]] = {}

    def update_and_normalize(self, records: list[RolloutRecord]) -> None:
        for record in records:
            key = (record.task_type, record.role)
            count, mean, m2 = self._state.get(key, (0, 0.0, 0.0))
            count += 1
            delta = record.reward - mean
            mean += delta / count
            m2 += delta * (record.reward - mean)
            self._state[key] = (count, mean, m2)
        for record in records:
            count, mean, m2 = self._state[(record.task_type, record.role)]
            std = math.sqrt(m2 / count) if count > 0 else 0.0
            if count < 2 or std <= EPSILON:
                record.advantage = 0.0
            else:
                record.advantage = (record.reward - mean) / (std + EPSILON)

    def stats(self) -> list[BaselineStats]:
        out = []
        for key in sorted(self._state, key=lambda g: (g[0].value, g[1].value)):
            count, mean, m2 = self._state[key]
            std = math.sqrt(m2 / count) if count else 0.0
            out.append(BaselineStats(key, mean, std, count))
        return out
