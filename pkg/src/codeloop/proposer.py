"""Buffer seeding and the propose phase.

Proposals arrive as think/answer responses; the answer block carries
fenced fields. Abduction and deduction proposals are (program, input)
pairs validated through the full pipeline; induction proposals are input
sets for a buffered program, valid only when every input yields a valid
output.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from random import Random

from .buffers import BufferSet, TaskBuffer
from .policy import Policy, SamplingParams, TransportError
from .prompts import PromptLibrary
from .sandbox import Sandbox
from .types import InductionTask, ParseStatus, TaskRecord, TaskType, Triplet, zero_triplet

DEFAULT_SEED_FACTOR = 4
DEFAULT_REFERENCES = 6
DEFAULT_INDUCTION_INPUTS = 10

_ANSWER = re.compile(r"<answer>(.*?)</answer>", re.DOTALL)
_FENCE = re.compile(r"```([A-Za-z_][\w]*)[ \t]*\n(.*?)```", re.DOTALL)


class SeedingError(RuntimeError):
    """Seeding could not reach its target buffer sizes."""


@dataclass
class ProposalParse:
    task_type: TaskType
    status: ParseStatus
    program: str | None = None
    input_text: str | None = None
    inputs: list[str] = field(default_factory=list)
    message: str = ""


def extract_answer_block(response: str) -> str | None:
    match = _ANSWER.search(response)
    return match.group(1) if match else None


def fenced_blocks(text: str) -> dict[str, list[str]]:
    blocks: dict[str, list[str]] = {}
    for lang, body in _FENCE.findall(text):
        blocks.setdefault(lang, []).append(body.strip("\n").rstrip())
    return blocks


def parse_proposal(response: str, task_type: TaskType) -> ProposalParse:
    answer = extract_answer_block(response)
    if answer is None:
        return ProposalParse(task_type, ParseStatus.FORMAT_ERROR)
    blocks = fenced_blocks(answer)
    if task_type is TaskType.INDUCTION:
        inputs = [text.strip() for text in blocks.get("input", [])]
        inputs = [text for text in inputs if text]
        if len(inputs) < 2 or "message" not in blocks:
            return ProposalParse(task_type, ParseStatus.FORMAT_ERROR)
        return ProposalParse(
            task_type,
            ParseStatus.WELL_FORMATTED,
            inputs=inputs,
            message=blocks["message"][0].strip(),
        )
    programs = blocks.get("python", [])
    inputs = blocks.get("input", [])
    if not programs or not inputs or not programs[0].strip() or not inputs[0].strip():
        return ProposalParse(task_type, ParseStatus.FORMAT_ERROR)
    return ProposalParse(
        task_type,
        ParseStatus.WELL_FORMATTED,
        program=programs[0],
        input_text=inputs[0].strip(),
    )


@dataclass
class SlotOutcome:
    """One proposal slot's record-facing result."""

    task_type: TaskType
    prompt: str
    response: str
    parse_status: ParseStatus
    valid: bool
    task: TaskRecord | None = None
    references: list[Triplet] = field(default_factory=list)


def _sample_references(buffer: TaskBuffer, k: int, rng: Random) -> list[Triplet]:
    if len(buffer) == 0:
        return [zero_triplet()]
    refs = buffer.sample(k, rng)
    return [t for t in refs if isinstance(t, Triplet)]


def _validate_induction_inputs(
    sandbox: Sandbox, program: str, inputs: list[str], timeout: float | None
) -> tuple[tuple[str, str], ...] | None:
    """All inputs must execute to a valid output (integrity-only check)."""
    pairs = []
    for input_text in inputs:
        verdict = sandbox.validate_and_construct(
            program, input_text, timeout=timeout, checks={"integrity"}
        )
        if not verdict.valid:
            return None
        pairs.append((input_text, verdict.output))
    return tuple(pairs)


def propose_pair_slot(
    policy: Policy,
    prompts: PromptLibrary,
    sandbox: Sandbox,
    buffer: TaskBuffer,
    task_type: TaskType,
    k: int,
    rng: Random,
    params: SamplingParams,
    timeout: float | None = None,
    determinism_runs: int = 2,
) -> SlotOutcome:
    references = _sample_references(buffer, k, rng)
    prompt = prompts.propose_pair_prompt(task_type, references)
    try:
        transcript = policy.generate(prompt, params)
    except TransportError:
        return SlotOutcome(
            task_type, prompt, "", ParseStatus.FORMAT_ERROR, valid=False,
            references=references,
        )
    parse = parse_proposal(transcript.response, task_type)
    if parse.status is ParseStatus.FORMAT_ERROR:
        return SlotOutcome(
            task_type, prompt, transcript.response, parse.status, valid=False,
            references=references,
        )
    verdict = sandbox.validate_and_construct(
        parse.program, parse.input_text, timeout=timeout,
        determinism_runs=determinism_runs,
    )
    if not verdict.valid:
        return SlotOutcome(
            task_type, prompt, transcript.response, parse.status, valid=False,
            references=references,
        )
    triplet = Triplet(parse.program, parse.input_text, verdict.output)
    buffer.insert(triplet)
    return SlotOutcome(
        task_type, prompt, transcript.response, parse.status, valid=True,
        task=triplet, references=references,
    )


def propose_induction_slot(
    policy: Policy,
    prompts: PromptLibrary,
    sandbox: Sandbox,
    buffers: BufferSet,
    n_inputs: int,
    rng: Random,
    params: SamplingParams,
    timeout: float | None = None,
) -> SlotOutcome:
    program = buffers.sample_union_program(rng)
    prompt = prompts.propose_induction_prompt(program, n_inputs)
    try:
        transcript = policy.generate(prompt, params)
    except TransportError:
        return SlotOutcome(
            TaskType.INDUCTION, prompt, "", ParseStatus.FORMAT_ERROR, valid=False
        )
    parse = parse_proposal(transcript.response, TaskType.INDUCTION)
    if parse.status is ParseStatus.FORMAT_ERROR:
        return SlotOutcome(
            TaskType.INDUCTION, prompt, transcript.response, parse.status, valid=False
        )
    pairs = _validate_induction_inputs(sandbox, program, parse.inputs, timeout)
    if pairs is None:
        return SlotOutcome(
            TaskType.INDUCTION, prompt, transcript.response, parse.status, valid=False
        )
    task = InductionTask(program=program, pairs=pairs, message=parse.message)
    buffers.induction.insert(task)
    return SlotOutcome(
        TaskType.INDUCTION, prompt, transcript.response, parse.status, valid=True,
        task=task,
    )


def propose_phase(
    policy: Policy,
    prompts: PromptLibrary,
    sandbox: Sandbox,
    buffers: BufferSet,
    batch_size: int,
    k: int,
    n_inputs: int,
    rng: Random,
    params: SamplingParams,
    timeout: float | None = None,
    determinism_runs: int = 2,
) -> dict[TaskType, list[SlotOutcome]]:
    """B proposal slots; each yields one induction, one deduction, and one
    abduction proposal. Valid tasks are inserted regardless of later reward."""
    outcomes: dict[TaskType, list[SlotOutcome]] = {t: [] for t in TaskType}
    for _slot in range(batch_size):
        outcomes[TaskType.INDUCTION].append(
            propose_induction_slot(
                policy, prompts, sandbox, buffers, n_inputs, rng, params, timeout
            )
        )
        for task_type in (TaskType.DEDUCTION, TaskType.ABDUCTION):
            outcomes[task_type].append(
                propose_pair_slot(
                    policy, prompts, sandbox, buffers.by_type(task_type), task_type,
                    k, rng, params, timeout, determinism_runs,
                )
            )
    return outcomes


def seed_buffers(
    policy: Policy,
    prompts: PromptLibrary,
    sandbox: Sandbox,
    batch_size: int,
    seed_factor: int = DEFAULT_SEED_FACTOR,
    k: int = DEFAULT_REFERENCES,
    n_inputs: int = DEFAULT_INDUCTION_INPUTS,
    rng: Random | None = None,
    params: SamplingParams | None = None,
    capacity: int | None = None,
    timeout: float | None = None,
    max_attempts_factor: int = 50,
) -> BufferSet:
    """Fill all three buffers to batch_size x seed_factor validated tasks.

    Seed programs are stripped of comments and top-level assignments
    before validation; abduction and deduction buffers start as copies of
    the seed set. No policy updates happen here. Transport errors abort;
    sandbox rejections just skip the candidate.
    """
    if batch_size < 1 or seed_factor < 1:
        raise ValueError("batch_size and seed_factor must be >= 1")
    rng = rng or Random(0)
    params = params or SamplingParams()
    target = batch_size * seed_factor
    buffers = BufferSet(capacity) if capacity else BufferSet()

    seed_pool = TaskBuffer(TaskType.DEDUCTION, capacity or 16384)
    max_attempts = max_attempts_factor * target

    attempts = 0
    while len(seed_pool) < target:
        if attempts >= max_attempts:
            raise SeedingError(
                f"seed pool stuck at {len(seed_pool)}/{target} after {attempts} attempts"
            )
        task_type = TaskType.DEDUCTION if attempts % 2 == 0 else TaskType.ABDUCTION
        attempts += 1
        references = _sample_references(seed_pool, k, rng)
        prompt = prompts.propose_pair_prompt(task_type, references)
        transcript = policy.generate(prompt, params)  # TransportError aborts seeding
        parse = parse_proposal(transcript.response, task_type)
        if parse.status is ParseStatus.FORMAT_ERROR:
            continue
        stripped = sandbox.strip_program(parse.program)
        if stripped is None:
            continue
        verdict = sandbox.validate_and_construct(stripped, parse.input_text, timeout=timeout)
        if not verdict.valid:
            continue
        seed_pool.insert(Triplet(stripped, parse.input_text, verdict.output))

    for item in seed_pool.items():
        buffers.abduction.insert(item)
        buffers.deduction.insert(item)

    attempts = 0
    while len(buffers.induction) < target:
        if attempts >= max_attempts:
            raise SeedingError(
                f"induction seeding stuck at {len(buffers.induction)}/{target}"
            )
        attempts += 1
        program_item = seed_pool.sample(1, rng)[0]
        assert isinstance(program_item, Triplet)
        program = program_item.program
        prompt = prompts.propose_induction_prompt(program, n_inputs)
        transcript = policy.generate(prompt, params)
        parse = parse_proposal(transcript.response, TaskType.INDUCTION)
        if parse.status is ParseStatus.FORMAT_ERROR:
            continue
        pairs = _validate_induction_inputs(sandbox, program, parse.inputs, timeout)
        if pairs is None:
            continue
        buffers.induction.insert(
            InductionTask(program=program, pairs=pairs, message=parse.message)
        )

    return buffers
