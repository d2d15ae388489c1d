"""Complexity and diversity metrics (observation-only)."""
from __future__ import annotations

import math
from functools import lru_cache

import pytest

from codeloop.metrics import (
    AnswerDiversityTracker,
    ast_edit_distance,
    halstead,
    tree_edit_distance,
    tree_size,
)

IDENTITY = "def f(x):\n    return x"


# -- independent brute-force ordered forest edit distance -------------------


def _freeze(tree: list) -> tuple:
    label, children = tree
    return (label, tuple(_freeze(c) for c in children))


def brute_force_distance(tree_a: list, tree_b: list) -> int:
    @lru_cache(maxsize=None)
    def size(tree) -> int:
        return 1 + sum(size(c) for c in tree[1])

    @lru_cache(maxsize=None)
    def forest(a: tuple, b: tuple) -> int:
        if not a and not b:
            return 0
        if not a:
            return sum(size(t) for t in b)
        if not b:
            return sum(size(t) for t in a)
        *rest_a, last_a = a
        *rest_b, last_b = b
        delete = forest(tuple(rest_a) + last_a[1], b) + 1
        insert = forest(a, tuple(rest_b) + last_b[1]) + 1
        relabel = 0 if last_a[0] == last_b[0] else 1
        match = forest(tuple(rest_a), tuple(rest_b)) + forest(last_a[1], last_b[1]) + relabel
        return min(delete, insert, match)

    return forest((_freeze(tree_a),), (_freeze(tree_b),))


class TestHalstead:
    def test_identity_hand_count(self, sandbox):
        # By hand: operators def ( ) : return -> N1=5, n1=5;
        # operands f x x -> N2=3, n2=2; volume = 8 * log2(7).
        metrics = halstead(sandbox.token_stream(IDENTITY))
        assert metrics.total_operators == 5
        assert metrics.distinct_operators == 5
        assert metrics.total_operands == 3
        assert metrics.distinct_operands == 2
        assert abs(metrics.volume - 8 * math.log2(7)) < 1e-12
        assert metrics.branch_count == 1

    def test_empty_program_error_path(self):
        with pytest.raises(ValueError):
            halstead([])

    def test_duplicated_statement_increases_totals(self, sandbox):
        single = halstead(sandbox.token_stream("def f(x):\n    y = x + 1\n    return y"))
        double = halstead(
            sandbox.token_stream(
                "def f(x):\n    y = x + 1\n    y = x + 1\n    return y"
            )
        )
        assert double.total_operators > single.total_operators
        assert double.total_operands > single.total_operands

    def test_branch_count_counts_decisions(self, sandbox):
        program = (
            "def f(x):\n"
            "    if x > 0 and x < 10:\n"
            "        return 1\n"
            "    for i in range(x):\n"
            "        x += i\n"
            "    return x"
        )
        metrics = halstead(sandbox.token_stream(program))
        assert metrics.branch_count == 1 + 3  # if, and, for


class TestTreeEditDistance:
    def test_identical_programs_zero(self, sandbox):
        tree = sandbox.tree_dump(IDENTITY)
        assert tree_edit_distance(tree, tree) == 0

    def test_single_relabel_is_one(self, sandbox):
        a = sandbox.tree_dump("def f(x):\n    return 1")
        b = sandbox.tree_dump("def f(x):\n    return 2")
        assert tree_edit_distance(a, b) == 1

    def test_trio_matches_brute_force_symmetric_triangle(self, sandbox):
        programs = [
            "def f(x):\n    return x + 1",
            "def f(x):\n    return x * 2",
            "def f(x):\n    y = x + 1\n    return y",
        ]
        trees = [sandbox.tree_dump(p) for p in programs]
        dist = {}
        for i in range(3):
            for j in range(3):
                dist[i, j] = tree_edit_distance(trees[i], trees[j])
                assert dist[i, j] == brute_force_distance(trees[i], trees[j])
        for i in range(3):
            for j in range(3):
                assert dist[i, j] == dist[j, i]
                for k in range(3):
                    assert dist[i, j] <= dist[i, k] + dist[k, j]

    def test_oversized_tree_falls_back_to_tokens(self, sandbox):
        big = "def f(x):\n" + "\n".join(f"    x += {i}" for i in range(300)) + "\n    return x"
        tree = sandbox.tree_dump(big)
        assert tree_size(tree) > 500
        tokens = sandbox.token_stream(big)
        distance, exact = ast_edit_distance(tree, tree, tokens, tokens, node_budget=500)
        assert not exact
        assert distance == 0.0

    def test_ast_edit_distance_exact_flag(self, sandbox):
        tree = sandbox.tree_dump(IDENTITY)
        distance, exact = ast_edit_distance(tree, tree)
        assert exact and distance == 0.0


class TestAnswerDiversity:
    def test_first_answer_scores_one(self):
        tracker = AnswerDiversityTracker()
        assert tracker.observe("42") == 1.0

    def test_answer_seen_always_scores_zero(self):
        tracker = AnswerDiversityTracker()
        for _ in range(4):
            tracker.observe("'a'")
        assert tracker.observe("'a'") == 0.0

    def test_answer_seen_one_of_four(self):
        tracker = AnswerDiversityTracker()
        for answer in ("x", "y", "z", "x"):
            tracker.observe(answer)
        # p('x') = 2/4 before the new observation? No: seen 1 of 4 case:
        tracker2 = AnswerDiversityTracker()
        for answer in ("x", "y", "z", "w"):
            tracker2.observe(answer)
        assert tracker2.observe("x") == 0.75

    def test_state_round_trip(self):
        tracker = AnswerDiversityTracker()
        tracker.observe("a")
        tracker.observe("b")
        clone = AnswerDiversityTracker()
        clone.restore(tracker.state())
        assert clone.probability("a") == 0.5
