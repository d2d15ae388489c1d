"""Logging-only metrics over proposed tasks.

Nothing here feeds rewards: complexity and diversity are observed for
monitoring and written to a per-iteration sidecar. Program structure
comes from the sandbox's inspect driver (token streams and syntax-tree
dumps), never from host-side parsing.
"""
from __future__ import annotations

import json
import math
import threading
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

TREE_NODE_BUDGET = 500

_OPERATOR_TOKENS = {"OP", "KEYWORD"}
_OPERAND_TOKENS = {"NAME", "NUMBER", "STRING"}
_BRANCH_KEYWORDS = {"if", "elif", "for", "while", "except", "and", "or"}


@dataclass(frozen=True)
class HalsteadMetrics:
    distinct_operators: int
    total_operators: int
    distinct_operands: int
    total_operands: int
    volume: float
    branch_count: int


def halstead(tokens: list[list[str]]) -> HalsteadMetrics:
    """Operator/operand counts and volume from a harness token stream.

    Operators are punctuation and keyword tokens; operands are names,
    numbers, and string literals. branch_count is a cyclomatic-style
    proxy: 1 + occurrences of if/elif/for/while/except/and/or.
    """
    operators: Counter[str] = Counter()
    operands: Counter[str] = Counter()
    branches = 0
    for name, text in tokens:
        if name in _OPERATOR_TOKENS:
            operators[text] += 1
            if text in _BRANCH_KEYWORDS:
                branches += 1
        elif name in _OPERAND_TOKENS or "STRING" in name:
            operands[text] += 1
    n1, n2 = len(operators), len(operands)
    total1, total2 = sum(operators.values()), sum(operands.values())
    if n1 + n2 == 0:
        raise ValueError("no countable tokens; program is empty")
    volume = (total1 + total2) * math.log2(n1 + n2)
    return HalsteadMetrics(
        distinct_operators=n1,
        total_operators=total1,
        distinct_operands=n2,
        total_operands=total2,
        volume=volume,
        branch_count=1 + branches,
    )


# -- ordered tree edit distance (Zhang-Shasha, unit costs) -----------------


class _FlatTree:
    def __init__(self, root: list):
        self.labels: list[str] = []
        self.lmld: list[int] = []
        self._flatten(root)
        self.keyroots = self._keyroots()

    def _flatten(self, node: list) -> int:
        label, children = node
        first_leaf = None
        for child in children:
            leaf = self._flatten(child)
            if first_leaf is None:
                first_leaf = leaf
        index = len(self.labels)
        self.labels.append(label)
        leaf = first_leaf if first_leaf is not None else index
        self.lmld.append(leaf)
        return self.lmld[index]

    def _keyroots(self) -> list[int]:
        latest: dict[int, int] = {}
        for index, leaf in enumerate(self.lmld):
            latest[leaf] = index
        return sorted(latest.values())

    def __len__(self) -> int:
        return len(self.labels)


def tree_size(node: list) -> int:
    label, children = node
    return 1 + sum(tree_size(child) for child in children)


def tree_edit_distance(tree_a: list, tree_b: list) -> int:
    """Exact ordered edit distance with unit insert/delete/relabel costs."""
    a, b = _FlatTree(tree_a), _FlatTree(tree_b)
    td = [[0] * len(b) for _ in range(len(a))]
    for ka in a.keyroots:
        for kb in b.keyroots:
            _tree_dist(a, b, ka, kb, td)
    return td[len(a) - 1][len(b) - 1]


def _tree_dist(a: _FlatTree, b: _FlatTree, i: int, j: int, td: list[list[int]]) -> None:
    li, lj = a.lmld[i], b.lmld[j]
    rows, cols = i - li + 2, j - lj + 2
    fd = [[0] * cols for _ in range(rows)]
    for x in range(1, rows):
        fd[x][0] = fd[x - 1][0] + 1
    for y in range(1, cols):
        fd[0][y] = fd[0][y - 1] + 1
    for x in range(1, rows):
        for y in range(1, cols):
            gi, gj = x + li - 1, y + lj - 1
            if a.lmld[gi] == li and b.lmld[gj] == lj:
                relabel = 0 if a.labels[gi] == b.labels[gj] else 1
                fd[x][y] = min(
                    fd[x - 1][y] + 1, fd[x][y - 1] + 1, fd[x - 1][y - 1] + relabel
                )
                td[gi][gj] = fd[x][y]
            else:
                p, q = a.lmld[gi] - li, b.lmld[gj] - lj
                fd[x][y] = min(fd[x - 1][y] + 1, fd[x][y - 1] + 1, fd[p][q] + td[gi][gj])


def _token_levenshtein(tokens_a: list[str], tokens_b: list[str]) -> int:
    if len(tokens_a) < len(tokens_b):
        tokens_a, tokens_b = tokens_b, tokens_a
    previous = list(range(len(tokens_b) + 1))
    for i, tok_a in enumerate(tokens_a, start=1):
        current = [i]
        for j, tok_b in enumerate(tokens_b, start=1):
            cost = 0 if tok_a == tok_b else 1
            current.append(min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + cost))
        previous = current
    return previous[-1]


def ast_edit_distance(
    tree_a: list,
    tree_b: list,
    tokens_a: list[list[str]] | None = None,
    tokens_b: list[list[str]] | None = None,
    node_budget: int = TREE_NODE_BUDGET,
) -> tuple[float, bool]:
    """(distance, exact). Oversized trees fall back to token edit distance.

    The fallback keeps worst-case cost bounded; its result is flagged
    exact=False and needs token streams for both programs.
    """
    if tree_size(tree_a) <= node_budget and tree_size(tree_b) <= node_budget:
        return float(tree_edit_distance(tree_a, tree_b)), True
    if tokens_a is None or tokens_b is None:
        raise ValueError("token streams required for the oversized-tree fallback")
    return (
        float(_token_levenshtein([t for _, t in tokens_a], [t for _, t in tokens_b])),
        False,
    )


class AnswerDiversityTracker:
    """Empirical categorical distribution over answers seen so far.

    observe() returns 1 - p(answer) computed before recording the new
    observation, so a first-ever answer scores 1.0.
    """

    def __init__(self) -> None:
        self._counts: Counter[str] = Counter()
        self._total = 0
        self._lock = threading.Lock()

    def observe(self, answer: str) -> float:
        with self._lock:
            before = self._counts[answer] / self._total if self._total else 0.0
            self._counts[answer] += 1
            self._total += 1
            return 1.0 - before

    def probability(self, answer: str) -> float:
        with self._lock:
            return self._counts[answer] / self._total if self._total else 0.0

    def state(self) -> dict:
        with self._lock:
            return dict(self._counts)

    def restore(self, counts: dict) -> None:
        with self._lock:
            self._counts = Counter(counts)
            self._total = sum(self._counts.values())


class MetricsLogger:
    """Per-iteration JSONL sidecar; a disabled logger writes nothing."""

    def __init__(self, path: str | Path | None, enabled: bool = True):
        self.enabled = enabled and path is not None
        self.path = Path(path) if path else None
        self.diversity = AnswerDiversityTracker()

    def write_iteration(self, iteration: int, proposed: list[dict], summary: dict) -> None:
        if not self.enabled:
            return
        self.path.parent.mkdir(parents=True, exist_ok=True)
        line = json.dumps(
            {"iteration": iteration, "proposed": proposed, "summary": summary}
        )
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(line + "\n")
