"""Solver queries, answer parsing, and verification semantics."""
from __future__ import annotations

from random import Random

import pytest

from codeloop.buffers import BufferSet
from codeloop.policy import MockPolicy, MockRule, SamplingParams
from codeloop.solver import (
    SolverQuery,
    build_solver_batch,
    parse_answer,
    solve_once,
    verify_abduction,
    verify_deduction,
    verify_induction,
)
from codeloop.types import InductionTask, ParseStatus, TaskType, Triplet

PARAMS = SamplingParams()


def make_triplet(i: int) -> Triplet:
    return Triplet(f"def f(x):\n    return x + {i}", "1", str(1 + i))


class TestSolverQuery:
    def test_induction_split_shows_first_half(self):
        task = InductionTask(
            "def f(x):\n    return x",
            tuple((str(i), str(i)) for i in range(10)),
            "identity",
        )
        query = SolverQuery(TaskType.INDUCTION, task)
        assert len(task.visible_pairs()) == 5
        assert task.visible_pairs() == task.pairs[:5]
        assert task.hidden_pairs() == task.pairs[5:]

    def test_odd_n_shows_floor_half(self):
        task = InductionTask(
            "def f(x):\n    return x",
            tuple((str(i), str(i)) for i in range(5)),
            "m",
        )
        assert len(task.visible_pairs()) == 2
        assert len(task.hidden_pairs()) == 3

    def test_prompts_hide_the_gold_portion(self, prompt_library):
        t = Triplet("def f(x):\n    return x * 3", "14", "42")
        ded = SolverQuery(TaskType.DEDUCTION, t).prompt(prompt_library)
        assert "14" in ded and "42" not in ded
        abd = SolverQuery(TaskType.ABDUCTION, t).prompt(prompt_library)
        assert "42" in abd and "14" not in abd


class TestBuildSolverBatch:
    def _buffers(self) -> BufferSet:
        buffers = BufferSet()
        for i in range(8):
            buffers.deduction.insert(make_triplet(i))
            buffers.abduction.insert(make_triplet(i + 100))
            buffers.induction.insert(
                InductionTask(
                    "def f(x):\n    return x", ((str(i), str(i)), ("1", "1")), "m"
                )
            )
        return buffers

    def test_all_sampled_when_no_new_tasks(self):
        batch = build_solver_batch(self._buffers(), {}, 4, Random(0))
        for task_type in TaskType:
            assert len(batch[task_type]) == 4

    def test_new_tasks_used_first(self):
        new = make_triplet(999)
        batch = build_solver_batch(
            self._buffers(), {TaskType.DEDUCTION: [new]}, 4, Random(0)
        )
        assert batch[TaskType.DEDUCTION][0].source == new
        assert len(batch[TaskType.DEDUCTION]) == 4

    def test_exactly_b_new_tasks_no_sampling(self):
        new = [make_triplet(900 + i) for i in range(3)]
        batch = build_solver_batch(
            self._buffers(), {TaskType.DEDUCTION: new}, 3, Random(0)
        )
        assert [q.source for q in batch[TaskType.DEDUCTION]] == new

    def test_remainder_filled_by_sampling(self):
        new = [make_triplet(900 + i) for i in range(3)]
        batch = build_solver_batch(
            self._buffers(), {TaskType.DEDUCTION: new}, 64, Random(0)
        )
        assert len(batch[TaskType.DEDUCTION]) == 64
        assert [q.source for q in batch[TaskType.DEDUCTION][:3]] == new


class TestParseAnswer:
    def test_deduction_fenced(self):
        response = "<think>t</think><answer>```output\n'Hello World'\n```</answer>"
        assert parse_answer(response, TaskType.DEDUCTION) == "'Hello World'"

    def test_missing_answer_tags(self):
        assert parse_answer("```output\n1\n```", TaskType.DEDUCTION) is None

    def test_bare_answer_accepted(self):
        assert parse_answer("<answer>42</answer>", TaskType.DEDUCTION) == "42"

    def test_induction_program_block(self):
        response = "<answer>```python\ndef f(x):\n    return x\n```</answer>"
        assert parse_answer(response, TaskType.INDUCTION) == "def f(x):\n    return x"

    def test_unexpected_fence_tag_still_parses(self):
        response = "<answer>```text\n42\n```</answer>"
        assert parse_answer(response, TaskType.DEDUCTION) == "42"

    def test_empty_answer_is_format_error(self):
        assert parse_answer("<answer>   </answer>", TaskType.ABDUCTION) is None


class TestVerification:
    def test_abduction_gold_input_always_accepted(self, sandbox):
        for program, input_text in [
            ("def f(x):\n    return x * 2", "21"),
            ("def f(s):\n    return s.upper()", "'ab'"),
        ]:
            assert verify_abduction(sandbox, program, input_text, input_text)

    def test_abduction_alternate_input_with_same_output(self, sandbox):
        # A solver may land on a different input than gold; output equality wins.
        program = "def f(x):\n    return x % 5"
        assert verify_abduction(sandbox, program, "7", "12")

    def test_abduction_constant_function(self, sandbox):
        assert verify_abduction(sandbox, "def f(x):\n    return 0", "3", "5")

    def test_abduction_gold_output_shortcut(self, sandbox):
        assert verify_abduction(
            sandbox, "def f(x):\n    return x", "'a'", "'a'", gold_output="'a'"
        )
        assert not verify_abduction(
            sandbox, "def f(x):\n    return x", "'a'", "'b'", gold_output="'a'"
        )

    def test_deduction_symmetric(self, sandbox):
        program = "def f(x):\n    return x"
        for a, b in [("{1, 2}", "{2, 1}"), ("0.5", "1/2"), ("[1, 2]", "[1, 3]")]:
            assert verify_deduction(sandbox, program, a, b) == verify_deduction(
                sandbox, program, b, a
            )

    def test_deduction_examples(self, sandbox):
        program = "def f(x):\n    return x"
        assert verify_deduction(sandbox, program, "{1, 2}", "{2, 1}")
        assert not verify_deduction(sandbox, program, "2", "3")
        assert not verify_deduction(sandbox, program, "(1, 2)", "(2, 1)")

    def test_induction_source_program_passes_own_pairs(self, sandbox):
        program = "def f(x):\n    return x * 2"
        pairs = (("1", "2"), ("'a'", "'aa'"), ("3", "6"))
        assert verify_induction(sandbox, program, pairs)

    def test_induction_hardcoder_fails_hidden_pairs(self, sandbox):
        gold = "def f(x):\n    return x * 2"
        pairs = (("1", "2"), ("2", "4"), ("3", "6"), ("10", "20"))
        hardcoder = (
            "def f(x):\n"
            "    if x == 1:\n        return 2\n"
            "    if x == 2:\n        return 4\n"
            "    return 0"
        )
        assert verify_induction(sandbox, gold, pairs)
        assert not verify_induction(sandbox, hardcoder, pairs)

    def test_induction_raising_program_fails(self, sandbox):
        pairs = (("1", "2"), ("2", "4"))
        assert not verify_induction(sandbox, "def f(x):\n    return x // 0", pairs)

    def test_induction_agent_program_safety_filtered(self, sandbox):
        pairs = (("1", "2"), ("2", "4"))
        unsafe = "import subprocess\ndef f(x):\n    return x * 2"
        assert not verify_induction(sandbox, unsafe, pairs)


class TestSolveOnce:
    def test_correct_answer(self, sandbox, prompt_library):
        t = Triplet("def f(x):\n    return x + 1", "41", "42")
        policy = MockPolicy(
            [MockRule("contains", "predict the output", ["<answer>```output\n42\n```</answer>"])]
        )
        outcome = solve_once(
            policy, prompt_library, sandbox, SolverQuery(TaskType.DEDUCTION, t), PARAMS
        )
        assert outcome.parse_status is ParseStatus.WELL_FORMATTED
        assert outcome.correct

    def test_format_error(self, sandbox, prompt_library):
        t = Triplet("def f(x):\n    return x + 1", "41", "42")
        policy = MockPolicy([MockRule("contains", "", ["gibberish"])])
        outcome = solve_once(
            policy, prompt_library, sandbox, SolverQuery(TaskType.DEDUCTION, t), PARAMS
        )
        assert outcome.parse_status is ParseStatus.FORMAT_ERROR
        assert not outcome.correct
