"""The outer self-play loop: seeding, iterations, emission, resume.

Each iteration runs the propose phase, then the solve phase, assigns
rewards, normalizes advantages, appends experience, and persists
buffers. Commit order per iteration is experience append -> buffer
append -> manifest write; the manifest records byte offsets of every
append-only file, so resume truncates back to the last completed
iteration and replays nothing.
"""
from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from random import Random

from .advantage import compute_global_baseline, compute_trr
from .buffers import BufferSet
from .config import RunConfig
from .metrics import MetricsLogger, ast_edit_distance, halstead
from .policy import (
    HttpPolicy,
    MockPolicy,
    Policy,
    SamplingParams,
    TransportError,
    mock_from_script,
)
from .prompts import PromptLibrary, estimate_tokens
from .proposer import SlotOutcome, propose_phase, seed_buffers
from .rewards import composite_reward, estimate_solve_rate, proposer_reward, solver_reward
from .sandbox import HarnessFailure, Sandbox
from .solver import SolverQuery, build_solver_batch, solve_once
from .types import (
    InductionTask,
    ParseStatus,
    Role,
    RolloutRecord,
    TaskRecord,
    TaskType,
    Triplet,
)

logger = logging.getLogger(__name__)

_TYPE_ORDER = (TaskType.ABDUCTION, TaskType.DEDUCTION, TaskType.INDUCTION)
_SEED_MIX = 1_000_003


class RunAborted(RuntimeError):
    """Unrecoverable failure; carries the iteration index."""

    def __init__(self, iteration: int, reason: str):
        super().__init__(f"iteration {iteration}: {reason}")
        self.iteration = iteration


@dataclass
class RunReport:
    iterations_completed: int
    records_emitted: int
    buffer_sizes: dict[str, int]
    experience_path: str
    reverify_failures: int = 0
    group_reward_means: dict[str, float] = field(default_factory=dict)


def emit_experience(records: list[RolloutRecord], path: Path) -> int:
    """Append one JSON object per record; returns the new file size."""
    for record in records:
        if record.advantage is None or record.advantage != record.advantage:
            raise ValueError("record emitted without a finite advantage")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "a", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record.to_json_obj()) + "\n")
        fh.flush()
        os.fsync(fh.fileno())
    return path.stat().st_size


def _truncate_file(path: Path, size: int) -> None:
    if path.exists() and path.stat().st_size > size:
        with open(path, "rb+") as fh:
            fh.truncate(size)


class Engine:
    def __init__(self, config: RunConfig, policy: Policy | None = None):
        self.config = config
        self.sandbox = Sandbox(
            interpreter=config.interpreter,
            timeout=config.timeout_seconds,
            kill_grace=config.kill_grace_seconds,
            max_workers=config.max_workers,
            env_allowlist=config.env_allowlist,
            harness_dir=config.harness_dir,
        )
        self.prompts = PromptLibrary(
            prompts_dir=config.prompts_dir,
            max_prompt_tokens=config.max_prompt_tokens,
        )
        if config.temperature == 0:
            # Learnability estimation needs sampling variation to mean anything.
            raise ValueError("self-play needs a nonzero rollout temperature")
        self.params = SamplingParams(
            temperature=config.temperature,
            top_p=config.top_p,
            max_response_tokens=config.max_response_tokens,
        )
        self.policy = policy or self._build_policy(config)
        self.buffers = BufferSet(config.buffer_capacity)
        self.metrics = MetricsLogger(config.metrics_path, enabled=config.metrics_enabled)
        self._persisted_counts = {t: 0 for t in TaskType}
        self._completed = -1  # -1 = not seeded; 0 = seeded; t = iteration t done

    @staticmethod
    def _build_policy(config: RunConfig) -> Policy:
        if config.policy_kind == "mock":
            if not config.mock_script:
                raise ValueError("mock policy needs policy.mock_script in the config")
            return mock_from_script(config.mock_script)
        return HttpPolicy(
            base_url=config.base_url,
            model=config.model,
            api_key_env=config.api_key_env,
            max_retries=config.max_retries,
            backoff_seconds=config.backoff_seconds,
            request_timeout=config.request_timeout,
            raw_completions=config.raw_completions,
        )

    def _iteration_rng(self, iteration: int) -> Random:
        return Random(self.config.seed * _SEED_MIX + iteration)

    # -- persistence -------------------------------------------------------

    def _write_manifest(self) -> None:
        cfg = self.config
        manifest = {
            "completed_iteration": self._completed,
            "experience_bytes": (
                cfg.experience_path.stat().st_size if cfg.experience_path.exists() else 0
            ),
            "buffer_lines": {t.value: self._persisted_counts[t] for t in TaskType},
            "buffer_bytes": {
                t.value: (
                    (cfg.buffers_dir / f"{t.value}.jsonl").stat().st_size
                    if (cfg.buffers_dir / f"{t.value}.jsonl").exists()
                    else 0
                )
                for t in TaskType
            },
            "metrics_bytes": (
                cfg.metrics_path.stat().st_size if cfg.metrics_path.exists() else 0
            ),
            "policy_state": self.policy.state() if isinstance(self.policy, MockPolicy) else None,
            "diversity_counts": self.metrics.diversity.state(),
            "seed": cfg.seed,
        }
        tmp = cfg.manifest_path.with_suffix(".tmp")
        cfg.manifest_path.parent.mkdir(parents=True, exist_ok=True)
        tmp.write_text(json.dumps(manifest, indent=2), encoding="utf-8")
        tmp.replace(cfg.manifest_path)

    def _persist_buffers(self) -> None:
        self.config.buffers_dir.mkdir(parents=True, exist_ok=True)
        for task_type in TaskType:
            buffer = self.buffers.by_type(task_type)
            new_lines = buffer.to_jsonl(start=self._persisted_counts[task_type])
            if new_lines:
                path = self.config.buffers_dir / f"{task_type.value}.jsonl"
                with open(path, "a", encoding="utf-8") as fh:
                    fh.write(new_lines)
                    fh.flush()
                    os.fsync(fh.fileno())
            self._persisted_counts[task_type] = len(buffer)

    def _load_manifest(self) -> bool:
        cfg = self.config
        if not cfg.manifest_path.exists():
            return False
        manifest = json.loads(cfg.manifest_path.read_text(encoding="utf-8"))
        self._completed = manifest["completed_iteration"]
        _truncate_file(cfg.experience_path, manifest["experience_bytes"])
        for task_type in TaskType:
            path = cfg.buffers_dir / f"{task_type.value}.jsonl"
            _truncate_file(path, manifest["buffer_bytes"][task_type.value])
        self.buffers.load_all(cfg.buffers_dir)
        for task_type in TaskType:
            self._persisted_counts[task_type] = len(self.buffers.by_type(task_type))
        _truncate_file(cfg.metrics_path, manifest.get("metrics_bytes", 0))
        state = manifest.get("policy_state")
        if state and isinstance(self.policy, MockPolicy):
            self.policy.restore(state)
        diversity = manifest.get("diversity_counts")
        if diversity:
            self.metrics.diversity.restore(diversity)
        return True

    # -- phases -------------------------------------------------------------

    def seed(self) -> BufferSet:
        """InitSeeding: fill all three buffers to B x S validated tasks."""
        if self._load_manifest():
            return self.buffers
        self.sandbox.self_check()
        rng = self._iteration_rng(0)
        self.buffers = seed_buffers(
            self.policy,
            self.prompts,
            self.sandbox,
            batch_size=self.config.batch_size,
            seed_factor=self.config.seed_factor,
            k=self.config.references,
            n_inputs=self.config.induction_inputs,
            rng=rng,
            params=self.params,
            capacity=self.config.buffer_capacity,
            timeout=self.config.timeout_seconds,
        )
        self._completed = 0
        self._persist_buffers()
        self._write_manifest()
        return self.buffers

    def _learnability(self, task_type: TaskType, task: TaskRecord) -> float:
        query = SolverQuery(task_type, task)

        def rollout() -> bool:
            return solve_once(
                self.policy, self.prompts, self.sandbox, query, self.params,
                timeout=self.config.timeout_seconds,
            ).correct

        return estimate_solve_rate(rollout, self.config.solve_samples)

    def _propose_record(
        self, iteration: int, slot: SlotOutcome
    ) -> tuple[RolloutRecord, float | None]:
        solve_rate = None
        if slot.parse_status is ParseStatus.FORMAT_ERROR or not slot.valid:
            reward = composite_reward(Role.PROPOSE, slot.parse_status, slot.valid, 0.0)
        else:
            solve_rate = self._learnability(slot.task_type, slot.task)
            raw = proposer_reward(solve_rate)
            reward = composite_reward(Role.PROPOSE, slot.parse_status, True, raw)
        record = RolloutRecord(
            role=Role.PROPOSE,
            task_type=slot.task_type,
            prompt=slot.prompt,
            response=slot.response,
            parse_status=slot.parse_status,
            reward=reward,
            iteration=iteration,
        )
        return record, solve_rate

    def _solve_record(self, iteration: int, query: SolverQuery) -> RolloutRecord:
        try:
            outcome = solve_once(
                self.policy, self.prompts, self.sandbox, query, self.params,
                timeout=self.config.timeout_seconds,
            )
            reward = composite_reward(
                Role.SOLVE, outcome.parse_status, True, solver_reward(outcome.correct)
            )
            return RolloutRecord(
                role=Role.SOLVE,
                task_type=query.task_type,
                prompt=outcome.prompt,
                response=outcome.response,
                parse_status=outcome.parse_status,
                reward=reward,
                iteration=iteration,
            )
        except TransportError:
            return RolloutRecord(
                role=Role.SOLVE,
                task_type=query.task_type,
                prompt=query.prompt(self.prompts),
                response="",
                parse_status=ParseStatus.FORMAT_ERROR,
                reward=-1.0,
                iteration=iteration,
            )

    def _task_metrics_row(self, slot: SlotOutcome) -> dict | None:
        if not slot.valid or slot.task is None:
            return None
        program = slot.task.program
        tokens = self.sandbox.token_stream(program)
        row: dict = {"task_type": slot.task_type.value}
        if tokens:
            hal = halstead(tokens)
            row["halstead_volume"] = hal.volume
            row["branch_count"] = hal.branch_count
        tree = self.sandbox.tree_dump(program)
        if tree is not None and slot.references:
            distances = []
            for reference in slot.references:
                ref_tree = self.sandbox.tree_dump(reference.program)
                if ref_tree is not None:
                    distance, _exact = ast_edit_distance(
                        tree, ref_tree,
                        tokens_a=tokens, tokens_b=self.sandbox.token_stream(reference.program),
                    )
                    distances.append(distance)
            if distances:
                row["ast_edit_distance_mean"] = sum(distances) / len(distances)
        if isinstance(slot.task, Triplet):
            answer = (
                slot.task.output
                if slot.task_type is TaskType.DEDUCTION
                else slot.task.input
            )
        else:
            answer = slot.task.program
        row["answer_diversity"] = self.metrics.diversity.observe(answer)
        return row

    def run_iteration(self, iteration: int) -> list[RolloutRecord]:
        rng = self._iteration_rng(iteration)
        outcomes = propose_phase(
            self.policy,
            self.prompts,
            self.sandbox,
            self.buffers,
            batch_size=self.config.batch_size,
            k=self.config.references,
            n_inputs=self.config.induction_inputs,
            rng=rng,
            params=self.params,
            timeout=self.config.timeout_seconds,
            determinism_runs=self.config.determinism_runs,
        )
        new_tasks = {
            task_type: [slot.task for slot in outcomes[task_type] if slot.valid]
            for task_type in TaskType
        }
        solver_batch = build_solver_batch(
            self.buffers, new_tasks, self.config.batch_size, rng
        )

        records: list[RolloutRecord] = []
        metric_rows: list[dict] = []
        for task_type in _TYPE_ORDER:
            for slot in outcomes[task_type]:
                record, _rate = self._propose_record(iteration, slot)
                records.append(record)
                if self.metrics.enabled:
                    row = self._task_metrics_row(slot)
                    if row:
                        metric_rows.append(row)
        for task_type in _TYPE_ORDER:
            for query in solver_batch[task_type]:
                records.append(self._solve_record(iteration, query))

        if self.config.advantage_mode == "trr":
            compute_trr(records)
        else:
            compute_global_baseline(records)

        if self.metrics.enabled:
            self.metrics.write_iteration(
                iteration, metric_rows, self._summary(records)
            )
        return records

    def _summary(self, records: list[RolloutRecord]) -> dict:
        groups: dict[str, list[RolloutRecord]] = {}
        for record in records:
            key = f"{record.task_type.value}/{record.role.value}"
            groups.setdefault(key, []).append(record)
        return {
            "reward_mean": {
                key: sum(r.reward for r in members) / len(members)
                for key, members in sorted(groups.items())
            },
            "response_tokens_mean": {
                key: sum(estimate_tokens(r.response) for r in members) / len(members)
                for key, members in sorted(groups.items())
            },
            "buffer_sizes": self.buffers.sizes(),
        }

    def reverify_sample(self, rng: Random, per_buffer: int = 3) -> int:
        """Re-execute a sampled subset of buffered triplets; count mismatches."""
        failures = 0
        for buffer in (self.buffers.abduction, self.buffers.deduction):
            items = buffer.items()
            if not items:
                continue
            for item in rng.sample(items, min(per_buffer, len(items))):
                assert isinstance(item, Triplet)
                outcome = self.sandbox.execute(item.program, item.input)
                if not outcome.ok or outcome.value != item.output:
                    failures += 1
                    logger.warning("buffered triplet no longer re-verifies: %r", item)
        return failures

    def run(self) -> RunReport:
        cfg = self.config
        self.seed()
        reverify_failures = self.reverify_sample(Random(cfg.seed * _SEED_MIX - 1))
        records_emitted = 0
        last_summary: dict = {}
        for iteration in range(self._completed + 1, cfg.iterations + 1):
            try:
                records = self.run_iteration(iteration)
            except TransportError as exc:
                raise RunAborted(iteration, f"policy transport failed: {exc}") from exc
            except HarnessFailure as exc:
                raise RunAborted(iteration, f"sandbox harness failed: {exc}") from exc
            emit_experience(records, cfg.experience_path)
            records_emitted += len(records)
            self._persist_buffers()
            self._completed = iteration
            self._write_manifest()
            last_summary = self._summary(records)
            logger.info(
                "iteration %d: %d records, buffers %s",
                iteration, len(records), self.buffers.sizes(),
            )
        return RunReport(
            iterations_completed=self._completed,
            records_emitted=records_emitted,
            buffer_sizes=self.buffers.sizes(),
            experience_path=str(cfg.experience_path),
            reverify_failures=reverify_failures,
            group_reward_means=last_summary.get("reward_mean", {}),
        )


def replay_advantages(
    experience_path: str | Path, mode: str = "trr"
) -> list[RolloutRecord]:
    """Recompute advantages over a stored experience file, grouped per iteration."""
    records: list[RolloutRecord] = []
    with open(experience_path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(RolloutRecord.from_json_obj(json.loads(line)))
    by_iteration: dict[int, list[RolloutRecord]] = {}
    for record in records:
        by_iteration.setdefault(record.iteration, []).append(record)
    for batch in by_iteration.values():
        if mode == "trr":
            compute_trr(batch)
        else:
            compute_global_baseline(batch)
    return records
