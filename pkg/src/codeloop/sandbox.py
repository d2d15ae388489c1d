"""Isolated execution of untrusted task-language programs.

Every call spawns a fresh interpreter subprocess running the shipped
guard driver with a rendered template script on stdin. The driver prints
exactly one line::

    OK <repr>                     value produced / verdict
    ERR <class>: <message>        the task program failed

Nonzero exit or anything else on stdout is a harness failure, never a
task verdict. Subprocess environments are scrubbed to an allowlist plus
pinned interpreter variables so canonical representations are stable
across processes and runs.
"""
from __future__ import annotations

import ast
import enum
import os
import re
import subprocess
import threading
import time
from dataclasses import dataclass
from pathlib import Path

from .templates import DriverTemplate, TemplateLibrary, internal_driver_path

# Verbatim default deny-list for proposed programs.
FORBIDDEN_MODULES = (
    "logging",
    "random",
    "multiprocessing",
    "pebble",
    "subprocess",
    "threading",
    "datetime",
    "time",
    "hashlib",
    "calendar",
    "bcrypt",
    "os.sys",
    "os.path",
    "sys.exit",
    "os.environ",
)

DEFAULT_TIMEOUT = 10.0
DEFAULT_KILL_GRACE = 2.0
DEFAULT_ENV_ALLOWLIST = ("PATH", "HOME", "LANG", "LC_ALL")

ALL_CHECKS = frozenset({"integrity", "safety", "determinism"})

# A null result makes abduction/deduction degenerate, so it fails integrity.
_NULL_VALUE_REPR = "None"


class ExecutionStatus(enum.Enum):
    OK = "ok"
    RAISED = "raised"
    TIMEOUT = "timeout"
    HARNESS_FAILURE = "harness_failure"


@dataclass(frozen=True)
class ExecutionOutcome:
    status: ExecutionStatus
    value: str | None = None
    error_class: str | None = None
    error_message: str | None = None
    wall_time: float = 0.0

    @property
    def ok(self) -> bool:
        return self.status is ExecutionStatus.OK


@dataclass(frozen=True)
class SafetyVerdict:
    passed: bool
    offending: tuple[str, ...] = ()


@dataclass(frozen=True)
class DeterminismVerdict:
    passed: bool
    output: str | None = None
    outcome: ExecutionOutcome | None = None


@dataclass(frozen=True)
class ValidationVerdict:
    """Short-circuited integrity -> safety -> determinism result.

    ``output`` is present iff every requested check passed. Checks that
    were not requested stay None.
    """

    integrity: bool | None = None
    safety: bool | None = None
    determinism: bool | None = None
    offending: tuple[str, ...] = ()
    output: str | None = None
    failure: str | None = None
    harness_failure: bool = False

    @property
    def valid(self) -> bool:
        return self.output is not None


@dataclass(frozen=True)
class InspectResult:
    ok: bool
    payload: dict | None = None
    error: str | None = None


class HarnessFailure(RuntimeError):
    """A driver run broke the wire protocol; retriable, not a task verdict."""


@dataclass(frozen=True)
class _SpawnResult:
    stdout: str
    stderr: str
    returncode: int
    wall_time: float
    timed_out: bool


class Sandbox:
    def __init__(
        self,
        interpreter: str = "python3",
        timeout: float = DEFAULT_TIMEOUT,
        kill_grace: float = DEFAULT_KILL_GRACE,
        max_workers: int = 4,
        forbidden: tuple[str, ...] = FORBIDDEN_MODULES,
        env_allowlist: tuple[str, ...] = DEFAULT_ENV_ALLOWLIST,
        harness_dir: str | Path | None = None,
    ):
        self.interpreter = interpreter
        self.timeout = timeout
        self.kill_grace = kill_grace
        self.forbidden = tuple(forbidden)
        self.env_allowlist = tuple(env_allowlist)
        self.templates = TemplateLibrary(harness_dir)
        self._runner = str(internal_driver_path("_runner.py"))
        self._inspector = str(internal_driver_path("_inspect.py"))
        self._sem = threading.BoundedSemaphore(max(1, max_workers))
        self._env = self._build_env()

    def _build_env(self) -> dict[str, str]:
        env = {key: os.environ[key] for key in self.env_allowlist if key in os.environ}
        env["PYTHONHASHSEED"] = "0"
        env["PYTHONIOENCODING"] = "utf-8"
        env["PYTHONDONTWRITEBYTECODE"] = "1"
        return env

    # -- wire protocol ---------------------------------------------------

    def _spawn(self, argv: list[str], stdin_text: str, timeout: float) -> _SpawnResult:
        start = time.monotonic()
        with self._sem:
            try:
                proc = subprocess.Popen(
                    argv,
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                    stderr=subprocess.PIPE,
                    env=self._env,
                    text=True,
                    encoding="utf-8",
                )
            except OSError as exc:
                return _SpawnResult(
                    stdout="",
                    stderr=f"spawn failed: {exc}",
                    returncode=-1,
                    wall_time=time.monotonic() - start,
                    timed_out=False,
                )
            try:
                stdout, stderr = proc.communicate(stdin_text, timeout=timeout)
            except subprocess.TimeoutExpired:
                proc.kill()
                try:
                    proc.communicate(timeout=self.kill_grace)
                except subprocess.TimeoutExpired:
                    pass
                return _SpawnResult(
                    stdout="",
                    stderr="",
                    returncode=-9,
                    wall_time=time.monotonic() - start,
                    timed_out=True,
                )
        return _SpawnResult(
            stdout=stdout,
            stderr=stderr,
            returncode=proc.returncode,
            wall_time=time.monotonic() - start,
            timed_out=False,
        )

    @staticmethod
    def _parse_protocol(spawn: _SpawnResult) -> ExecutionOutcome:
        if spawn.timed_out:
            return ExecutionOutcome(ExecutionStatus.TIMEOUT, wall_time=spawn.wall_time)
        if spawn.returncode != 0:
            return ExecutionOutcome(
                ExecutionStatus.HARNESS_FAILURE,
                error_message=spawn.stderr.strip()[:500] or f"exit {spawn.returncode}",
                wall_time=spawn.wall_time,
            )
        lines = spawn.stdout.splitlines()
        if len(lines) != 1:
            return ExecutionOutcome(
                ExecutionStatus.HARNESS_FAILURE,
                error_message=f"malformed driver output ({len(lines)} lines)",
                wall_time=spawn.wall_time,
            )
        line = lines[0]
        if line.startswith("OK "):
            return ExecutionOutcome(
                ExecutionStatus.OK, value=line[3:], wall_time=spawn.wall_time
            )
        if line.startswith("ERR "):
            body = line[4:]
            error_class, _, message = body.partition(": ")
            return ExecutionOutcome(
                ExecutionStatus.RAISED,
                error_class=error_class,
                error_message=message,
                wall_time=spawn.wall_time,
            )
        return ExecutionOutcome(
            ExecutionStatus.HARNESS_FAILURE,
            error_message="malformed driver output",
            wall_time=spawn.wall_time,
        )

    def run_template(
        self,
        template: DriverTemplate,
        bindings: dict[str, str],
        timeout: float | None = None,
    ) -> ExecutionOutcome:
        script = self.templates.render(template, bindings)
        spawn = self._spawn(
            [self.interpreter, self._runner], script, timeout or self.timeout
        )
        return self._parse_protocol(spawn)

    # -- operations ------------------------------------------------------

    def execute(
        self, program: str, input_text: str, timeout: float | None = None
    ) -> ExecutionOutcome:
        """Run f(input) via the validate driver; Ok carries the canonical repr."""
        if not program.strip():
            return ExecutionOutcome(
                ExecutionStatus.RAISED,
                error_class="ValueError",
                error_message="empty program",
            )
        return self.run_template(
            DriverTemplate.VALIDATE, {"code": program, "inputs": input_text}, timeout
        )

    def inspect(self, program: str) -> InspectResult:
        spawn = self._spawn([self.interpreter, self._inspector], program, self.timeout)
        outcome = self._parse_protocol(spawn)
        if outcome.status is ExecutionStatus.OK:
            try:
                payload = ast.literal_eval(outcome.value)
            except (ValueError, SyntaxError) as exc:
                raise HarnessFailure(f"bad inspect payload: {exc}") from exc
            return InspectResult(ok=True, payload=payload)
        if outcome.status is ExecutionStatus.RAISED:
            return InspectResult(ok=False, error=outcome.error_message)
        raise HarnessFailure(outcome.error_message or "inspect driver failed")

    def _textual_scan(self, program: str) -> tuple[str, ...]:
        offending = []
        for name in self.forbidden:
            pattern = r"(?<![\w.])" + re.escape(name) + r"(?!\w)"
            if re.search(pattern, program):
                offending.append(name)
        return tuple(sorted(offending))

    def check_safety(self, program: str) -> SafetyVerdict:
        """Fail iff the program references a forbidden module name.

        Import statements and attribute paths are collected by the
        inspect driver; a path offends when it equals a forbidden entry
        or extends one with a dot. Unparseable programs fall back to a
        textual word-boundary scan.
        """
        try:
            inspection = self.inspect(program)
        except HarnessFailure:
            inspection = InspectResult(ok=False, error="inspect unavailable")
        if not inspection.ok:
            offending = self._textual_scan(program)
            return SafetyVerdict(passed=not offending, offending=offending)
        paths = set(inspection.payload["imports"]) | set(
            inspection.payload["attributes"]
        )
        offending = tuple(
            sorted(
                name
                for name in self.forbidden
                if any(p == name or p.startswith(name + ".") for p in paths)
            )
        )
        return SafetyVerdict(passed=not offending, offending=offending)

    def check_determinism(
        self,
        program: str,
        input_text: str,
        runs: int = 2,
        timeout: float | None = None,
    ) -> DeterminismVerdict:
        """Evaluate f(input) ``runs`` times in one process; pass iff all equal."""
        if runs < 2:
            raise ValueError("determinism check needs runs >= 2")
        outcome = self.run_template(
            DriverTemplate.DETERMINISM,
            {"code": program, "inputs": input_text, "runs": str(runs)},
            timeout,
        )
        if outcome.ok:
            return DeterminismVerdict(passed=True, output=outcome.value, outcome=outcome)
        return DeterminismVerdict(passed=False, outcome=outcome)

    def validate_and_construct(
        self,
        program: str,
        input_text: str,
        timeout: float | None = None,
        checks: frozenset[str] | set[str] = ALL_CHECKS,
        determinism_runs: int = 2,
    ) -> ValidationVerdict:
        """Integrity, safety, determinism in order, short-circuiting."""
        integrity: bool | None = None
        safety: bool | None = None
        determinism: bool | None = None
        offending: tuple[str, ...] = ()
        output: str | None = None

        if "integrity" in checks:
            outcome = self.execute(program, input_text, timeout)
            if outcome.status is ExecutionStatus.HARNESS_FAILURE:
                return ValidationVerdict(
                    integrity=False,
                    failure=f"harness: {outcome.error_message}",
                    harness_failure=True,
                )
            integrity = outcome.ok and outcome.value != _NULL_VALUE_REPR
            if not integrity:
                detail = (
                    "null result"
                    if outcome.ok
                    else f"{outcome.error_class or outcome.status.value}: "
                    f"{outcome.error_message or ''}".rstrip(": ")
                )
                return ValidationVerdict(integrity=False, failure=detail)
            output = outcome.value

        if "safety" in checks:
            verdict = self.check_safety(program)
            safety = verdict.passed
            offending = verdict.offending
            if not safety:
                return ValidationVerdict(
                    integrity=integrity,
                    safety=False,
                    offending=offending,
                    failure=f"forbidden: {', '.join(offending)}",
                )

        if "determinism" in checks:
            det = self.check_determinism(
                program, input_text, runs=determinism_runs, timeout=timeout
            )
            determinism = det.passed
            if not determinism:
                harness = (
                    det.outcome is not None
                    and det.outcome.status is ExecutionStatus.HARNESS_FAILURE
                )
                return ValidationVerdict(
                    integrity=integrity,
                    safety=safety,
                    determinism=False,
                    offending=offending,
                    failure="nondeterministic or failing rerun",
                    harness_failure=harness,
                )
            output = det.output

        return ValidationVerdict(
            integrity=integrity,
            safety=safety,
            determinism=determinism,
            offending=offending,
            output=output,
        )

    # -- verification drivers ---------------------------------------------

    def eval_abduction(
        self,
        program: str,
        gold_output: str,
        agent_input: str,
        timeout: float | None = None,
    ) -> bool:
        """True iff f(agent_input) equals the gold value. Raising inputs are wrong."""
        outcome = self.run_template(
            DriverTemplate.ABDUCTION_EVAL,
            {"code": program, "gold_output": gold_output, "agent_input": agent_input},
            timeout,
        )
        return self._verdict(outcome)

    def eval_deduction(
        self,
        program: str,
        gold_output: str,
        agent_output: str,
        timeout: float | None = None,
    ) -> bool:
        """Value equality of two representation texts, evaluated in-language."""
        outcome = self.run_template(
            DriverTemplate.DEDUCTION_EVAL,
            {
                "code": program,
                "gold_output": repr(gold_output),
                "agent_output": repr(agent_output),
            },
            timeout,
        )
        return self._verdict(outcome)

    def eval_induction(
        self,
        program: str,
        pairs: tuple[tuple[str, str], ...] | list[tuple[str, str]],
        timeout: float | None = None,
    ) -> bool:
        """True iff the program maps every gold input to its gold output."""
        inputs = [i for i, _ in pairs]
        outputs = [o for _, o in pairs]
        outcome = self.run_template(
            DriverTemplate.INDUCTION_EVAL,
            {
                "code": program,
                "gold_inputs": repr(inputs),
                "gold_outputs": repr(outputs),
            },
            timeout,
        )
        return self._verdict(outcome)

    @staticmethod
    def _verdict(outcome: ExecutionOutcome) -> bool:
        if outcome.status is ExecutionStatus.HARNESS_FAILURE:
            raise HarnessFailure(outcome.error_message or "driver failed")
        return outcome.ok and outcome.value == "True"

    # -- syntax services ---------------------------------------------------

    def strip_program(self, program: str) -> str | None:
        """Source minus comments and top-level assignments; None if unparseable."""
        inspection = self.inspect(program)
        if not inspection.ok:
            return None
        return inspection.payload["stripped"]

    def token_stream(self, program: str) -> list[list[str]] | None:
        inspection = self.inspect(program)
        if not inspection.ok:
            return None
        return inspection.payload["tokens"]

    def tree_dump(self, program: str) -> list | None:
        inspection = self.inspect(program)
        if not inspection.ok:
            return None
        return inspection.payload["tree"]

    def self_check(self) -> None:
        """Validate the zero triplet end to end; raise if the harness is broken."""
        from .types import zero_triplet

        seed = zero_triplet()
        verdict = self.validate_and_construct(seed.program, seed.input)
        if not verdict.valid or verdict.output != seed.output:
            raise HarnessFailure(
                f"zero-triplet self check failed: {verdict.failure or verdict}"
            )
