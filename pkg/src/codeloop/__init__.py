"""Self-play engine for verifiable code-reasoning tasks.

Drives a pluggable policy through propose/solve rollouts over
(program, input, output) triplets, grounds every task in an external
interpreter sandbox, and emits reward- and advantage-annotated
experience for an external trainer.
"""
from .types import (
    InductionTask,
    ParseStatus,
    Role,
    RolloutRecord,
    TaskType,
    Triplet,
    zero_triplet,
)
from .buffers import BufferSet, InsertResult, TaskBuffer
from .sandbox import (
    ExecutionOutcome,
    ExecutionStatus,
    Sandbox,
    ValidationVerdict,
)

__all__ = [
    "BufferSet",
    "ExecutionOutcome",
    "ExecutionStatus",
    "InductionTask",
    "InsertResult",
    "ParseStatus",
    "Role",
    "RolloutRecord",
    "Sandbox",
    "TaskBuffer",
    "TaskType",
    "Triplet",
    "ValidationVerdict",
    "zero_triplet",
]
