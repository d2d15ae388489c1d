"""Growing validated-task stores with uniform sampling and JSONL persistence.

Buffers are append-only until capacity and guarded for concurrent use.
One JSONL file per buffer; programs are stored verbatim (JSON handles
newline escaping).
"""
from __future__ import annotations

import enum
import json
import threading
from pathlib import Path
from random import Random

from .types import InductionTask, TaskRecord, TaskType, Triplet

DEFAULT_CAPACITY = 16384


class InsertResult(enum.Enum):
    INSERTED = "inserted"
    AT_CAPACITY = "at_capacity"


class BufferTypeError(TypeError):
    """Item type does not match the buffer's task type."""


class EmptyBufferError(LookupError):
    """Sampling was requested from an empty buffer."""


class TaskBuffer:
    def __init__(self, task_type: TaskType, capacity: int = DEFAULT_CAPACITY):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.task_type = task_type
        self.capacity = capacity
        self._items: list[TaskRecord] = []
        self._lock = threading.Lock()

    def __len__(self) -> int:
        with self._lock:
            return len(self._items)

    def _check_type(self, item: TaskRecord) -> None:
        expected = InductionTask if self.task_type is TaskType.INDUCTION else Triplet
        if not isinstance(item, expected):
            raise BufferTypeError(
                f"{self.task_type.value} buffer cannot hold {type(item).__name__}"
            )

    def insert(self, item: TaskRecord) -> InsertResult:
        self._check_type(item)
        with self._lock:
            if len(self._items) >= self.capacity:
                return InsertResult.AT_CAPACITY
            self._items.append(item)
            return InsertResult.INSERTED

    def sample(self, count: int, rng: Random) -> list[TaskRecord]:
        """Uniform draw: without replacement when count <= size, with otherwise."""
        if count < 1:
            raise ValueError("count must be >= 1")
        with self._lock:
            if not self._items:
                raise EmptyBufferError(f"{self.task_type.value} buffer is empty")
            if count <= len(self._items):
                return rng.sample(self._items, count)
            return rng.choices(self._items, k=count)

    def items(self) -> list[TaskRecord]:
        with self._lock:
            return list(self._items)

    def save(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(path.suffix + ".tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(self.to_jsonl())
        tmp.replace(path)

    def to_jsonl(self, start: int = 0) -> str:
        with self._lock:
            items = self._items[start:]
        return "".join(
            json.dumps(item.to_json_obj(self.task_type)) + "\n" for item in items
        )

    def load(self, path: str | Path) -> None:
        items: list[TaskRecord] = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                obj = json.loads(line)
                if obj["task_type"] != self.task_type.value:
                    raise BufferTypeError(
                        f"line of type {obj['task_type']!r} in "
                        f"{self.task_type.value} buffer file"
                    )
                if "pairs" in obj:
                    items.append(InductionTask.from_json_obj(obj))
                else:
                    items.append(Triplet.from_json_obj(obj))
        with self._lock:
            self._items = items[: self.capacity]

    def truncate(self, size: int) -> None:
        """Drop items beyond ``size`` (crash-resume rollback)."""
        with self._lock:
            del self._items[size:]


class BufferSet:
    """The three per-task-type buffers plus union sampling for induction."""

    def __init__(self, capacity: int = DEFAULT_CAPACITY):
        self.abduction = TaskBuffer(TaskType.ABDUCTION, capacity)
        self.deduction = TaskBuffer(TaskType.DEDUCTION, capacity)
        self.induction = TaskBuffer(TaskType.INDUCTION, capacity)

    def by_type(self, task_type: TaskType) -> TaskBuffer:
        return {
            TaskType.ABDUCTION: self.abduction,
            TaskType.DEDUCTION: self.deduction,
            TaskType.INDUCTION: self.induction,
        }[task_type]

    def sample_union_program(self, rng: Random) -> str:
        """One program drawn uniformly from abduction ∪ deduction items."""
        pool = self.abduction.items() + self.deduction.items()
        if not pool:
            raise EmptyBufferError("abduction and deduction buffers are both empty")
        chosen = rng.choice(pool)
        assert isinstance(chosen, Triplet)
        return chosen.program

    def sizes(self) -> dict[str, int]:
        return {
            TaskType.ABDUCTION.value: len(self.abduction),
            TaskType.DEDUCTION.value: len(self.deduction),
            TaskType.INDUCTION.value: len(self.induction),
        }

    def save_all(self, directory: str | Path) -> None:
        directory = Path(directory)
        for task_type in TaskType:
            self.by_type(task_type).save(directory / f"{task_type.value}.jsonl")

    def load_all(self, directory: str | Path) -> None:
        directory = Path(directory)
        for task_type in TaskType:
            path = directory / f"{task_type.value}.jsonl"
            if path.exists():
                self.by_type(task_type).load(path)
