"""Sandbox execution, safety, determinism, and the validation pipeline."""
from __future__ import annotations

import time

import pytest

from codeloop.sandbox import ExecutionStatus, Sandbox
from codeloop.types import zero_triplet

IDENTITY = zero_triplet().program


class TestExecute:
    def test_identity_hello_world(self, sandbox):
        outcome = sandbox.execute(IDENTITY, "'Hello World'")
        assert outcome.status is ExecutionStatus.OK
        assert outcome.value == "'Hello World'"

    def test_division_error(self, sandbox):
        outcome = sandbox.execute("def f(x):\n    return 1 // x", "0")
        assert outcome.status is ExecutionStatus.RAISED
        assert outcome.error_class == "ZeroDivisionError"

    def test_timeout_wall_clock(self, sandbox):
        # Unbounded loop killed at ~the requested timeout (kill-grace bound).
        start = time.monotonic()
        outcome = sandbox.execute(
            "def f(x):\n    while True:\n        pass", "1", timeout=1.5
        )
        elapsed = time.monotonic() - start
        assert outcome.status is ExecutionStatus.TIMEOUT
        assert elapsed < 1.5 + sandbox.kill_grace + 2.0

    def test_empty_program(self, sandbox):
        outcome = sandbox.execute("", "1")
        assert outcome.status is ExecutionStatus.RAISED

    def test_syntax_error_is_raised_not_harness(self, sandbox):
        outcome = sandbox.execute("def f(x:\n    return x", "1")
        assert outcome.status is ExecutionStatus.RAISED
        assert outcome.error_class == "SyntaxError"

    def test_missing_interpreter_is_harness_failure(self):
        broken = Sandbox(interpreter="/nonexistent/python3", timeout=2.0)
        outcome = broken.execute(IDENTITY, "1")
        assert outcome.status is ExecutionStatus.HARNESS_FAILURE

    def test_multi_argument_input(self, sandbox):
        outcome = sandbox.execute("def f(a, b):\n    return a + b", "2, 3")
        assert outcome.ok and outcome.value == "5"

    def test_wall_time_recorded(self, sandbox):
        outcome = sandbox.execute(IDENTITY, "1")
        assert outcome.wall_time > 0


class TestSafety:
    def test_os_sys_import(self, sandbox):
        verdict = sandbox.check_safety("import os.sys\ndef f(x):\n    return x")
        assert not verdict.passed
        assert verdict.offending == ("os.sys",)

    def test_identity_passes(self, sandbox):
        assert sandbox.check_safety(IDENTITY).passed

    def test_forbidden_token_in_string_passes(self, sandbox):
        verdict = sandbox.check_safety("def f(x):\n    return 'random' + x")
        assert verdict.passed

    def test_attribute_path_detected_without_import(self, sandbox):
        verdict = sandbox.check_safety("def f(x):\n    return random.random()")
        assert not verdict.passed and "random" in verdict.offending

    def test_from_import_detected(self, sandbox):
        verdict = sandbox.check_safety("from hashlib import md5\ndef f(x):\n    return md5(x)")
        assert not verdict.passed and "hashlib" in verdict.offending

    def test_os_path_through_allowed_os(self, sandbox):
        verdict = sandbox.check_safety(
            "import os\ndef f(x):\n    return os.path.join('a', x)"
        )
        assert not verdict.passed and verdict.offending == ("os.path",)

    def test_bare_os_import_allowed(self, sandbox):
        # The deny-list names os.sys/os.path/os.environ, not os itself.
        assert sandbox.check_safety("import os\ndef f(x):\n    return x").passed

    def test_unparseable_falls_back_to_textual(self, sandbox):
        verdict = sandbox.check_safety("def f(x:\n  import random")
        assert not verdict.passed and "random" in verdict.offending


class TestDeterminism:
    def test_identity_passes(self, sandbox):
        verdict = sandbox.check_determinism(IDENTITY, "'Hello World'")
        assert verdict.passed and verdict.output == "'Hello World'"

    def test_counter_fails(self, sandbox):
        # Seeded-counter program: second in-process call differs.
        program = "_c = [0]\ndef f(x):\n    _c[0] += 1\n    return _c[0]"
        verdict = sandbox.check_determinism(program, "1")
        assert not verdict.passed
        assert verdict.outcome.error_message == "Non-deterministic code"

    def test_set_insertion_order_is_value_equal(self, sandbox):
        program = (
            "def f(x):\n"
            "    s = set()\n"
            "    for ch in x:\n"
            "        s.add(ch)\n"
            "    return s"
        )
        verdict = sandbox.check_determinism(program, "'abc'")
        assert verdict.passed

    def test_runs_parameter(self, sandbox):
        # A program varying only on the third call passes j=2 but fails j=3.
        program = (
            "_c = [0]\n"
            "def f(x):\n"
            "    _c[0] += 1\n"
            "    return 0 if _c[0] < 3 else 1"
        )
        assert sandbox.check_determinism(program, "1", runs=2).passed
        assert not sandbox.check_determinism(program, "1", runs=3).passed

    def test_runs_below_two_rejected(self, sandbox):
        with pytest.raises(ValueError):
            sandbox.check_determinism(IDENTITY, "1", runs=1)

    def test_raising_program_fails(self, sandbox):
        verdict = sandbox.check_determinism("def f(x):\n    return 1 // 0", "1")
        assert not verdict.passed


class TestValidateAndConstruct:
    def test_identity_full_pass(self, sandbox):
        verdict = sandbox.validate_and_construct(IDENTITY, "'Hello World'")
        assert verdict.valid and verdict.output == "'Hello World'"

    def test_forbidden_import_fails_safety_after_integrity(self, sandbox):
        verdict = sandbox.validate_and_construct(
            "import subprocess\ndef f(x):\n    return x", "1"
        )
        assert verdict.integrity is True
        assert verdict.safety is False
        assert "subprocess" in verdict.offending
        assert verdict.output is None

    def test_none_result_fails_integrity(self, sandbox):
        verdict = sandbox.validate_and_construct("def f(x):\n    pass", "1")
        assert verdict.integrity is False
        assert verdict.output is None

    def test_integrity_only_check_set(self, sandbox):
        # Induction-input validation path: no safety or determinism runs.
        verdict = sandbox.validate_and_construct(
            "import subprocess\ndef f(x):\n    return x", "1", checks={"integrity"}
        )
        assert verdict.valid and verdict.safety is None and verdict.determinism is None

    def test_pass_implies_reexecution_matches(self, sandbox):
        program = "def f(x):\n    return sorted(x)"
        verdict = sandbox.validate_and_construct(program, "[3, 1, 2]")
        assert verdict.valid
        for _ in range(2):
            outcome = sandbox.execute(program, "[3, 1, 2]")
            assert outcome.ok and outcome.value == verdict.output

    def test_nondeterministic_fails_last(self, sandbox):
        program = "_c = [0]\ndef f(x):\n    _c[0] += 1\n    return _c[0]"
        verdict = sandbox.validate_and_construct(program, "1")
        assert verdict.integrity is True
        assert verdict.safety is True
        assert verdict.determinism is False


class TestEvalDrivers:
    def test_abduction_constant_program(self, sandbox):
        assert sandbox.eval_abduction("def f(x):\n    return 0", "0", "5")

    def test_abduction_wrong_input(self, sandbox):
        assert not sandbox.eval_abduction(IDENTITY, "'a'", "'b'")

    def test_abduction_raising_input_is_wrong(self, sandbox):
        assert not sandbox.eval_abduction("def f(x):\n    return 10 // x", "10", "0")

    def test_deduction_set_order(self, sandbox):
        assert sandbox.eval_deduction(IDENTITY, "{1, 2}", "{2, 1}")

    def test_deduction_value_mismatch(self, sandbox):
        assert not sandbox.eval_deduction(IDENTITY, "2", "3")

    def test_deduction_malformed_agent_text_is_wrong(self, sandbox):
        assert not sandbox.eval_deduction(IDENTITY, "2", "[1, 2")

    def test_induction_matches_conjunction_of_pairwise_checks(self, sandbox):
        # The all-cases driver must equal per-pair deduction-style checks.
        program = "def f(x):\n    return x * 2"
        pairs = [("1", "2"), ("3", "6"), ("'a'", "'aa'")]
        joint = sandbox.eval_induction(program, pairs)
        pairwise = all(
            sandbox.eval_abduction(program, out, inp) for inp, out in pairs
        )
        assert joint is True and pairwise is True
        bad_pairs = pairs + [("4", "9")]
        assert sandbox.eval_induction(program, bad_pairs) is False
        assert not all(
            sandbox.eval_abduction(program, out, inp) for inp, out in bad_pairs
        )
