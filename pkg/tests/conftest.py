"""Shared fixtures: a short-timeout sandbox and the scripted smoke policy.

The smoke script drives the whole loop from the zero triplet: proposer
rules emit a doubling program (with a comment and a global, so seeding
has something to strip) and a string-appending program; solver rules
answer correctly for the doubler tasks and incorrectly for the rest,
which is deterministic either way.
"""
from __future__ import annotations

import json
from pathlib import Path

import pytest

from codeloop.policy import MockPolicy, MockRule, mock_from_script
from codeloop.prompts import PromptLibrary
from codeloop.sandbox import Sandbox

DOUBLER_RAW = "W = 3\ndef f(x):\n    # double the input\n    return x * 2"
DOUBLER = "def f(x):\n    return x * 2"
APPENDER = "def f(s):\n    return s + '!'"

PROPOSE_DEDUCTION_RESPONSE = (
    "<think>arithmetic</think>\n<answer>\n"
    "```python\n" + DOUBLER_RAW + "\n```\n"
    "```input\n7\n```\n</answer>"
)
PROPOSE_ABDUCTION_RESPONSE = (
    "<think>strings</think>\n<answer>\n"
    "```python\n" + APPENDER + "\n```\n"
    "```input\n'hi'\n```\n</answer>"
)
PROPOSE_INDUCTION_RESPONSE = (
    "<think>cover short strings</think>\n<answer>\n"
    "```input\n'a'\n```\n"
    "```input\n'bb'\n```\n"
    "```input\n'xyz'\n```\n"
    "```input\n'q'\n```\n"
    "```message\nTransforms a string without inspecting its characters.\n```\n"
    "</answer>"
)
SOLVE_DEDUCTION_RESPONSE = "<think>trace</think>\n<answer>\n```output\n14\n```\n</answer>"
SOLVE_ABDUCTION_RESPONSE = "<think>search</think>\n<answer>\n```input\n7\n```\n</answer>"
SOLVE_INDUCTION_RESPONSE = (
    "<think>generalize</think>\n<answer>\n```python\n" + DOUBLER + "\n```\n</answer>"
)

SMOKE_RULES = [
    {"match": {"kind": "contains", "pattern": "propose a new output-prediction problem"},
     "responses": [PROPOSE_DEDUCTION_RESPONSE]},
    {"match": {"kind": "contains", "pattern": "propose a new input-finding problem"},
     "responses": [PROPOSE_ABDUCTION_RESPONSE]},
    {"match": {"kind": "contains", "pattern": "inputs and a description for a program"},
     "responses": [PROPOSE_INDUCTION_RESPONSE]},
    {"match": {"kind": "contains", "pattern": "## Task: predict the output"},
     "responses": [SOLVE_DEDUCTION_RESPONSE]},
    {"match": {"kind": "contains", "pattern": "## Task: find an input"},
     "responses": [SOLVE_ABDUCTION_RESPONSE]},
    {"match": {"kind": "contains", "pattern": "## Task: write the program"},
     "responses": [SOLVE_INDUCTION_RESPONSE]},
]


def write_smoke_script(path: Path) -> Path:
    path.write_text(
        json.dumps({"rules": SMOKE_RULES, "on_unmatched": "error"}, indent=2),
        encoding="utf-8",
    )
    return path


def smoke_policy() -> MockPolicy:
    return MockPolicy(
        [
            MockRule(rule["match"]["kind"], rule["match"]["pattern"], rule["responses"])
            for rule in SMOKE_RULES
        ]
    )


def write_smoke_config(
    config_path: Path,
    workdir: Path,
    *,
    iterations: int = 1,
    batch_size: int = 2,
    seed_factor: int = 4,
    solve_samples: int = 2,
    seed: int = 11,
    metrics_enabled: bool = True,
    extra: str = "",
) -> Path:
    script_path = config_path.parent / "smoke_policy.json"
    if not script_path.exists():
        write_smoke_script(script_path)
    config_path.write_text(
        f"""
[run]
batch_size = {batch_size}
references = 3
iterations = {iterations}
seed_factor = {seed_factor}
solve_samples = {solve_samples}
induction_inputs = 4
seed = {seed}
metrics_enabled = {str(metrics_enabled).lower()}

[sampling]
temperature = 1.0
top_p = 1.0

[sandbox]
timeout_seconds = 5.0
max_workers = 4

[paths]
workdir = "{workdir}"

[policy]
policy_kind = "mock"
mock_script = "{script_path}"
{extra}
""",
        encoding="utf-8",
    )
    return config_path


@pytest.fixture(scope="session")
def sandbox() -> Sandbox:
    return Sandbox(timeout=5.0, max_workers=8)


@pytest.fixture(scope="session")
def prompt_library() -> PromptLibrary:
    return PromptLibrary()


@pytest.fixture()
def mock_policy() -> MockPolicy:
    return smoke_policy()


@pytest.fixture()
def smoke_script(tmp_path: Path) -> Path:
    return write_smoke_script(tmp_path / "smoke_policy.json")
