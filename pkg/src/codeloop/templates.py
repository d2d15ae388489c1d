"""Driver template loading and rendering.

Templates are plain text files with ``{name}`` placeholder slots,
substituted verbatim in a single pass (an inserted program containing
braces is never re-scanned). The five public templates live under a
``harness/`` directory; the package ships defaults and any directory with
the same file names can override them.
"""
from __future__ import annotations

import enum
import re
from importlib import resources
from pathlib import Path

_PLACEHOLDER = re.compile(
    r"\{(code|inputs|gold_output|agent_input|agent_output|gold_inputs|gold_outputs|runs)\}"
)


class DriverTemplate(enum.Enum):
    VALIDATE = "validate"
    DETERMINISM = "determinism"
    ABDUCTION_EVAL = "abduction_eval"
    DEDUCTION_EVAL = "deduction_eval"
    INDUCTION_EVAL = "induction_eval"

    @property
    def filename(self) -> str:
        return f"{self.value}.py.tmpl"


class RenderError(KeyError):
    """A placeholder required by the template was not bound."""


def render(template_body: str, bindings: dict[str, str]) -> str:
    """Substitute every placeholder slot; raise naming the first unbound one."""

    def _sub(match: re.Match) -> str:
        slot = match.group(1)
        if slot not in bindings:
            raise RenderError(slot)
        return str(bindings[slot])

    return _PLACEHOLDER.sub(_sub, template_body)


class TemplateLibrary:
    """The five driver templates, loaded from package data or a directory."""

    def __init__(self, harness_dir: str | Path | None = None):
        self._bodies: dict[DriverTemplate, str] = {}
        for template in DriverTemplate:
            self._bodies[template] = self._load(template, harness_dir)

    @staticmethod
    def _load(template: DriverTemplate, harness_dir: str | Path | None) -> str:
        if harness_dir:
            candidate = Path(harness_dir) / template.filename
            if not candidate.exists():
                # Template directories may nest the files one level down.
                candidate = Path(harness_dir) / "templates" / template.filename
            if candidate.exists():
                return candidate.read_text(encoding="utf-8")
            raise FileNotFoundError(
                f"harness template {template.filename!r} not found under {harness_dir}"
            )
        ref = resources.files("codeloop") / "harness" / template.filename
        return ref.read_text(encoding="utf-8")

    def body(self, template: DriverTemplate) -> str:
        return self._bodies[template]

    def render(self, template: DriverTemplate, bindings: dict[str, str]) -> str:
        return render(self._bodies[template], bindings)


def internal_driver_path(name: str) -> Path:
    """Filesystem path of a shipped internal driver (_runner.py, _inspect.py)."""
    ref = resources.files("codeloop") / "harness" / name
    return Path(str(ref))
