"""Run configuration: defaults, TOML loading, CLI overrides.

Defaults mirror the training hyperparameter table (batch 64, K=6,
T=500, seed factor 4, 8 accuracy samples, 16384-item buffers, 6144/8096
length limits, temperature/top-p 1.0). Paths in a config file resolve
relative to the file itself so a run is reproducible from one artifact.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path

try:
    import tomllib
except ImportError:  # Python 3.10
    import tomli as tomllib

from .sandbox import DEFAULT_ENV_ALLOWLIST


@dataclass
class RunConfig:
    # loop
    batch_size: int = 64
    references: int = 6
    iterations: int = 500
    seed_factor: int = 4
    solve_samples: int = 8
    induction_inputs: int = 10
    determinism_runs: int = 2
    seed: int = 0
    advantage_mode: str = "trr"  # trr | global
    metrics_enabled: bool = True
    lambda_propose: float = 1.0  # weighting left to the trainer
    buffer_capacity: int = 16384
    # sampling
    temperature: float = 1.0
    top_p: float = 1.0
    max_response_tokens: int = 8096
    max_prompt_tokens: int = 6144
    # sandbox
    interpreter: str = "python3"
    timeout_seconds: float = 10.0
    kill_grace_seconds: float = 2.0
    max_workers: int = 4
    env_allowlist: tuple[str, ...] = DEFAULT_ENV_ALLOWLIST
    harness_dir: str | None = None
    # paths
    workdir: Path = field(default_factory=lambda: Path("runs/default"))
    prompts_dir: str | None = None
    # policy
    policy_kind: str = "mock"  # mock | http
    mock_script: str | None = None
    base_url: str = ""
    model: str = ""
    api_key_env: str = "POLICY_API_KEY"
    max_retries: int = 3
    backoff_seconds: float = 1.0
    request_timeout: float = 120.0
    raw_completions: bool = False

    def __post_init__(self) -> None:
        if self.advantage_mode not in ("trr", "global"):
            raise ValueError("advantage_mode must be 'trr' or 'global'")
        if self.policy_kind not in ("mock", "http"):
            raise ValueError("policy_kind must be 'mock' or 'http'")
        for name in ("batch_size", "references", "seed_factor", "solve_samples"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        self.workdir = Path(self.workdir)

    # derived paths
    @property
    def buffers_dir(self) -> Path:
        return self.workdir / "buffers"

    @property
    def experience_path(self) -> Path:
        return self.workdir / "experience.jsonl"

    @property
    def metrics_path(self) -> Path:
        return self.workdir / "metrics.jsonl"

    @property
    def manifest_path(self) -> Path:
        return self.workdir / "manifest.json"


_SECTIONS = {
    "run": (
        "batch_size", "references", "iterations", "seed_factor", "solve_samples",
        "induction_inputs", "determinism_runs", "seed", "advantage_mode",
        "metrics_enabled", "lambda_propose", "buffer_capacity",
    ),
    "sampling": ("temperature", "top_p", "max_response_tokens", "max_prompt_tokens"),
    "sandbox": (
        "interpreter", "timeout_seconds", "kill_grace_seconds", "max_workers",
        "env_allowlist", "harness_dir",
    ),
    "paths": ("workdir", "prompts_dir"),
    "policy": (
        "policy_kind", "mock_script", "base_url", "model", "api_key_env",
        "max_retries", "backoff_seconds", "request_timeout", "raw_completions",
    ),
}

_PATH_FIELDS = ("workdir", "prompts_dir", "harness_dir", "mock_script")


def load_config(path: str | Path, overrides: dict | None = None) -> RunConfig:
    """Read a TOML config; relative paths resolve against the file's directory."""
    path = Path(path)
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    values: dict = {}
    for section, names in _SECTIONS.items():
        table = raw.get(section, {})
        for key in table:
            if key not in names:
                raise ValueError(f"unknown config key [{section}] {key}")
        for name in names:
            if name in table:
                values[name] = table[name]
    if "env_allowlist" in values:
        values["env_allowlist"] = tuple(values["env_allowlist"])
    for name in _PATH_FIELDS:
        if values.get(name):
            candidate = Path(values[name])
            if not candidate.is_absolute():
                values[name] = str((path.parent / candidate).resolve())
    if overrides:
        valid = {f.name for f in fields(RunConfig)}
        for key, value in overrides.items():
            if key not in valid:
                raise ValueError(f"unknown config override {key!r}")
            if value is not None:
                values[key] = value
    return RunConfig(**values)
