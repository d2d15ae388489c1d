"""Prompt construction from the on-disk prompt library.

One text file per (role, task type), with placeholder slots substituted
in a single verbatim pass. Proposer prompts inline reference tasks and
the forbidden-module list; over-long prompts drop their oldest
references first.
"""
from __future__ import annotations

import re
from importlib import resources
from pathlib import Path

from .sandbox import FORBIDDEN_MODULES
from .types import TaskType, Triplet

DEFAULT_MAX_PROMPT_TOKENS = 6144
_CHARS_PER_TOKEN = 4

_SLOT = re.compile(r"\{(forbidden|references|n_inputs|program|input|output|message|pairs)\}")

_PROMPT_FILES = {
    ("propose", TaskType.ABDUCTION): "propose_abduction.txt",
    ("propose", TaskType.DEDUCTION): "propose_deduction.txt",
    ("propose", TaskType.INDUCTION): "propose_induction.txt",
    ("solve", TaskType.ABDUCTION): "solve_abduction.txt",
    ("solve", TaskType.DEDUCTION): "solve_deduction.txt",
    ("solve", TaskType.INDUCTION): "solve_induction.txt",
}


def estimate_tokens(text: str) -> int:
    """Character-count proxy used for offline-reproducible length limits."""
    return max(1, len(text) // _CHARS_PER_TOKEN)


def _fill(body: str, bindings: dict[str, str]) -> str:
    def _sub(match: re.Match) -> str:
        slot = match.group(1)
        if slot not in bindings:
            raise KeyError(f"prompt slot {slot!r} unbound")
        return str(bindings[slot])

    return _SLOT.sub(_sub, body)


def render_reference(index: int, triplet: Triplet) -> str:
    return (
        f"<example_{index}>\n"
        f"```python\n{triplet.program}\n```\n"
        f"```input\n{triplet.input}\n```\n"
        f"```output\n{triplet.output}\n```\n"
        f"</example_{index}>"
    )


def render_pairs(pairs) -> str:
    blocks = []
    for idx, (inp, out) in enumerate(pairs):
        blocks.append(f"```input_{idx}\n{inp}\n```\n```output_{idx}\n{out}\n```")
    return "\n".join(blocks)


class PromptLibrary:
    def __init__(
        self,
        prompts_dir: str | Path | None = None,
        forbidden: tuple[str, ...] = FORBIDDEN_MODULES,
        max_prompt_tokens: int = DEFAULT_MAX_PROMPT_TOKENS,
    ):
        self.forbidden = tuple(forbidden)
        self.max_prompt_tokens = max_prompt_tokens
        self._bodies: dict[tuple[str, TaskType], str] = {}
        for key, filename in _PROMPT_FILES.items():
            self._bodies[key] = self._load(filename, prompts_dir)

    @staticmethod
    def _load(filename: str, prompts_dir: str | Path | None) -> str:
        if prompts_dir:
            path = Path(prompts_dir) / filename
            if path.exists():
                return path.read_text(encoding="utf-8")
            raise FileNotFoundError(f"prompt file {filename!r} not found in {prompts_dir}")
        ref = resources.files("codeloop") / "prompt_data" / filename
        return ref.read_text(encoding="utf-8")

    def _forbidden_text(self) -> str:
        return ", ".join(self.forbidden)

    def propose_pair_prompt(self, task_type: TaskType, references: list[Triplet]) -> str:
        """Abduction/deduction proposer prompt with K in-context references."""
        if task_type not in (TaskType.ABDUCTION, TaskType.DEDUCTION):
            raise ValueError("pair proposals exist for abduction and deduction only")
        body = self._bodies[("propose", task_type)]
        refs = list(references)
        while True:
            rendered_refs = "\n".join(
                render_reference(i, t) for i, t in enumerate(refs)
            )
            prompt = _fill(
                body,
                {"forbidden": self._forbidden_text(), "references": rendered_refs},
            )
            if estimate_tokens(prompt) <= self.max_prompt_tokens or len(refs) <= 1:
                return prompt
            refs = refs[1:]  # drop the oldest reference first

    def propose_induction_prompt(self, program: str, n_inputs: int) -> str:
        body = self._bodies[("propose", TaskType.INDUCTION)]
        return _fill(
            body,
            {
                "forbidden": self._forbidden_text(),
                "program": program,
                "n_inputs": str(n_inputs),
            },
        )

    def solve_deduction_prompt(self, program: str, input_text: str) -> str:
        body = self._bodies[("solve", TaskType.DEDUCTION)]
        return _fill(body, {"program": program, "input": input_text})

    def solve_abduction_prompt(self, program: str, output_text: str) -> str:
        body = self._bodies[("solve", TaskType.ABDUCTION)]
        return _fill(body, {"program": program, "output": output_text})

    def solve_induction_prompt(self, message: str, visible_pairs) -> str:
        body = self._bodies[("solve", TaskType.INDUCTION)]
        return _fill(body, {"message": message, "pairs": render_pairs(visible_pairs)})
