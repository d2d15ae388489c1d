"""The solve phase: query construction, answer parsing, verification.

Deduction shows (program, input) and hides the output; abduction shows
(program, output) and hides the input; induction shows the first half of
the pairs plus the message and hides the rest along with the program.
Verification always happens inside the interpreter, by value equality.
"""
from __future__ import annotations

from dataclasses import dataclass
from random import Random

from .buffers import BufferSet
from .policy import Policy, SamplingParams, TransportError
from .prompts import PromptLibrary
from .proposer import extract_answer_block, fenced_blocks
from .sandbox import HarnessFailure, Sandbox
from .types import InductionTask, ParseStatus, TaskRecord, TaskType, Triplet

_ANSWER_FENCES = {
    TaskType.DEDUCTION: "output",
    TaskType.ABDUCTION: "input",
    TaskType.INDUCTION: "python",
}


@dataclass(frozen=True)
class SolverQuery:
    task_type: TaskType
    source: TaskRecord

    @property
    def program(self) -> str:
        return self.source.program

    def prompt(self, prompts: PromptLibrary) -> str:
        if self.task_type is TaskType.DEDUCTION:
            assert isinstance(self.source, Triplet)
            return prompts.solve_deduction_prompt(self.source.program, self.source.input)
        if self.task_type is TaskType.ABDUCTION:
            assert isinstance(self.source, Triplet)
            return prompts.solve_abduction_prompt(self.source.program, self.source.output)
        assert isinstance(self.source, InductionTask)
        return prompts.solve_induction_prompt(
            self.source.message, self.source.visible_pairs()
        )


def build_solver_batch(
    buffers: BufferSet,
    new_tasks: dict[TaskType, list[TaskRecord]],
    batch_size: int,
    rng: Random,
) -> dict[TaskType, list[SolverQuery]]:
    """All of this iteration's valid tasks, topped up from the buffers to B."""
    batch: dict[TaskType, list[SolverQuery]] = {}
    for task_type in TaskType:
        tasks = list(new_tasks.get(task_type, []))[:batch_size]
        missing = batch_size - len(tasks)
        if missing > 0:
            tasks.extend(buffers.by_type(task_type).sample(missing, rng))
        batch[task_type] = [SolverQuery(task_type, task) for task in tasks]
    return batch


def parse_answer(response: str, task_type: TaskType) -> str | None:
    """The answer payload text, or None on a format error.

    Fenced content is preferred; a bare answer block is accepted too.
    """
    answer = extract_answer_block(response)
    if answer is None:
        return None
    blocks = fenced_blocks(answer)
    fence = _ANSWER_FENCES[task_type]
    if blocks.get(fence):
        text = blocks[fence][0]
        return text if text.strip() else None
    if blocks:
        # Fenced with an unexpected tag: take the first block rather than
        # failing the format check outright.
        first = next(iter(blocks.values()))[0]
        return first if first.strip() else None
    bare = answer.strip()
    return bare or None


def verify_abduction(
    sandbox: Sandbox,
    program: str,
    gold_input: str,
    agent_input: str,
    timeout: float | None = None,
    gold_output: str | None = None,
) -> bool:
    """True iff program(agent_input) == program(gold_input) by value.

    The gold output is recomputed from the gold input unless the caller
    already holds it (validated triplets always do).
    """
    if gold_output is None:
        outcome = sandbox.execute(program, gold_input, timeout)
        if not outcome.ok:
            raise HarnessFailure(
                f"gold input no longer executes: {outcome.error_class or outcome.status.value}"
            )
        gold_output = outcome.value
    return sandbox.eval_abduction(program, gold_output, agent_input, timeout)


def verify_deduction(
    sandbox: Sandbox,
    program: str,
    gold_output: str,
    agent_output: str,
    timeout: float | None = None,
) -> bool:
    return sandbox.eval_deduction(program, gold_output, agent_output, timeout)


def verify_induction(
    sandbox: Sandbox,
    agent_program: str,
    pairs,
    timeout: float | None = None,
) -> bool:
    """Grade the agent program on every gold pair.

    Agent programs are as untrusted as proposals: the safety filter runs
    before any execution.
    """
    if not sandbox.check_safety(agent_program).passed:
        return False
    return sandbox.eval_induction(agent_program, pairs, timeout)


def verify_answer(
    sandbox: Sandbox,
    query: SolverQuery,
    answer_text: str,
    timeout: float | None = None,
) -> bool:
    if query.task_type is TaskType.DEDUCTION:
        assert isinstance(query.source, Triplet)
        return verify_deduction(
            sandbox, query.program, query.source.output, answer_text, timeout
        )
    if query.task_type is TaskType.ABDUCTION:
        assert isinstance(query.source, Triplet)
        return verify_abduction(
            sandbox,
            query.program,
            query.source.input,
            answer_text,
            timeout,
            gold_output=query.source.output,
        )
    assert isinstance(query.source, InductionTask)
    return verify_induction(sandbox, answer_text, query.source.pairs, timeout)


@dataclass
class SolveOutcome:
    prompt: str
    response: str
    parse_status: ParseStatus
    correct: bool
    answer_text: str | None = None


def solve_once(
    policy: Policy,
    prompts: PromptLibrary,
    sandbox: Sandbox,
    query: SolverQuery,
    params: SamplingParams,
    timeout: float | None = None,
) -> SolveOutcome:
    """One solver rollout, parsed and verified.

    Transport errors retry once and then propagate; verification harness
    failures retry once and then score the answer as wrong rather than
    killing a long run.
    """
    prompt = query.prompt(prompts)
    try:
        transcript = policy.generate(prompt, params)
    except TransportError:
        transcript = policy.generate(prompt, params)
    answer_text = parse_answer(transcript.response, query.task_type)
    if answer_text is None:
        return SolveOutcome(prompt, transcript.response, ParseStatus.FORMAT_ERROR, False)
    try:
        correct = verify_answer(sandbox, query, answer_text, timeout)
    except HarnessFailure:
        try:
            correct = verify_answer(sandbox, query, answer_text, timeout)
        except HarnessFailure:
            correct = False
    return SolveOutcome(
        prompt, transcript.response, ParseStatus.WELL_FORMATTED, correct, answer_text
    )
