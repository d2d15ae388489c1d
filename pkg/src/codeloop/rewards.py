"""Learnability, solve, and composite rewards.

The proposer is paid for tasks of moderate difficulty: its raw reward is
1 - mean solver success, except that an unsolvable task (mean 0) earns 0,
so both extremes are worthless. The solver's raw reward is binary
correctness. The composite layer overrides with -1 for format/filter
failures and -0.5 for a wrong but well-formatted solver answer.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .policy import TransportError
from .types import ParseStatus, Role, TaskType

DEFAULT_SOLVE_SAMPLES = 8


def proposer_reward(mean_solve_rate: float) -> float:
    if not 0.0 <= mean_solve_rate <= 1.0:
        raise ValueError("mean solve rate must be in [0, 1]")
    if mean_solve_rate == 0.0:
        return 0.0
    return 1.0 - mean_solve_rate


def solver_reward(correct: bool) -> float:
    return 1.0 if correct else 0.0


def composite_reward(
    role: Role,
    parse_status: ParseStatus,
    passed_filters: bool,
    raw_role: float,
) -> float:
    """Format-aware reward override.

    Proposer responses count as correctly formatted only when the
    validity filters also pass, so a filter failure is -1, never -0.5;
    a valid proposal keeps its raw reward even at 0. A solver answer is
    -1 on format errors, -0.5 when well-formatted but wrong, raw (1)
    when right.
    """
    if not 0.0 <= raw_role <= 1.0:
        raise ValueError("raw role reward must be in [0, 1]")
    if parse_status is ParseStatus.FORMAT_ERROR:
        return -1.0
    if role is Role.PROPOSE:
        if not passed_filters:
            return -1.0
        return raw_role
    if raw_role == 0.0:
        return -0.5
    return raw_role


@dataclass
class RewardBreakdown:
    role: Role
    task_type: TaskType
    raw_role: float
    composite: float
    solve_rate_estimate: float | None = None
    rollout_count: int = 0


def estimate_solve_rate(
    run_rollout: Callable[[], bool],
    samples: int = DEFAULT_SOLVE_SAMPLES,
) -> float:
    """Mean success over Monte Carlo solver rollouts.

    Each rollout retries one transport failure; a rollout that fails
    transport twice counts as a miss. A batch where every rollout died in
    transport raises instead of reporting a fake 0.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    successes = 0
    transport_failures = 0
    for _ in range(samples):
        try:
            successes += 1 if run_rollout() else 0
        except TransportError:
            try:
                successes += 1 if run_rollout() else 0
            except TransportError:
                transport_failures += 1
    if transport_failures == samples:
        raise TransportError("every learnability rollout failed in transport")
    return successes / samples
