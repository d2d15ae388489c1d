"""Domain types shared by every module.

A task is always a (program, input, output) triplet or its induction
extension. Programs are task-language source text defining a single
function ``f``; inputs are argument-expression texts; outputs are the
canonical printed representation produced by the task-language
interpreter. Value texts are stored exactly as the interpreter printed
them and are never re-serialized by the host.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace


class TaskType(enum.Enum):
    ABDUCTION = "abduction"
    DEDUCTION = "deduction"
    INDUCTION = "induction"

    def __str__(self) -> str:
        return self.value


class Role(enum.Enum):
    PROPOSE = "propose"
    SOLVE = "solve"

    def __str__(self) -> str:
        return self.value


class ParseStatus(enum.Enum):
    WELL_FORMATTED = "well_formatted"
    FORMAT_ERROR = "format_error"


@dataclass(frozen=True)
class Triplet:
    """A validated (program, input, output) record.

    Instances are built from sandbox output: ``output`` is the canonical
    representation of running ``program`` on ``input``, established at
    construction time and re-checkable at any point.
    """

    program: str
    input: str
    output: str

    def to_json_obj(self, task_type: TaskType) -> dict:
        return {
            "task_type": task_type.value,
            "program": self.program,
            "input": self.input,
            "output": self.output,
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "Triplet":
        return cls(program=obj["program"], input=obj["input"], output=obj["output"])


@dataclass(frozen=True)
class InductionTask:
    """A program with N input/output pairs and a free-text message.

    Pairs are (input text, output text) in proposal order. N must be at
    least 2 so the solver-visible half and the hidden half are both
    nonempty. The message carries no constraints and may be empty.
    """

    program: str
    pairs: tuple[tuple[str, str], ...]
    message: str = ""

    def __post_init__(self) -> None:
        if len(self.pairs) < 2:
            raise ValueError("induction task needs at least 2 input/output pairs")

    @property
    def n(self) -> int:
        return len(self.pairs)

    def visible_pairs(self) -> tuple[tuple[str, str], ...]:
        """First floor(N/2) pairs, shown to the solver."""
        return self.pairs[: self.n // 2]

    def hidden_pairs(self) -> tuple[tuple[str, str], ...]:
        return self.pairs[self.n // 2 :]

    def to_json_obj(self, task_type: TaskType = TaskType.INDUCTION) -> dict:
        return {
            "task_type": task_type.value,
            "program": self.program,
            "pairs": [[i, o] for i, o in self.pairs],
            "message": self.message,
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "InductionTask":
        return cls(
            program=obj["program"],
            pairs=tuple((i, o) for i, o in obj["pairs"]),
            message=obj.get("message", ""),
        )


TaskRecord = Triplet | InductionTask


@dataclass
class RolloutRecord:
    """One rollout's trainer-facing experience unit."""

    role: Role
    task_type: TaskType
    prompt: str
    response: str
    parse_status: ParseStatus
    reward: float
    advantage: float | None = None
    iteration: int = 0

    def to_json_obj(self) -> dict:
        return {
            "iteration": self.iteration,
            "role": self.role.value,
            "task_type": self.task_type.value,
            "prompt": self.prompt,
            "response": self.response,
            "parse_status": self.parse_status.value,
            "reward": self.reward,
            "advantage": self.advantage,
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "RolloutRecord":
        return cls(
            role=Role(obj["role"]),
            task_type=TaskType(obj["task_type"]),
            prompt=obj["prompt"],
            response=obj["response"],
            parse_status=ParseStatus(obj["parse_status"]),
            reward=obj["reward"],
            advantage=obj["advantage"],
            iteration=obj["iteration"],
        )


ZERO_PROGRAM = "def f(x):\n    return x"
ZERO_INPUT = "'Hello World'"
ZERO_OUTPUT = "'Hello World'"


def zero_triplet() -> Triplet:
    """The identity-function triplet used to bootstrap empty buffers."""
    return Triplet(program=ZERO_PROGRAM, input=ZERO_INPUT, output=ZERO_OUTPUT)
