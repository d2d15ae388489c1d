"""Pluggable rollout providers.

The engine only ever calls ``generate(prompt, params)`` and treats the
response as opaque text, so a remote chat-completions server and the
deterministic scripted mock are interchangeable.
"""
from __future__ import annotations

import json
import os
import re
import threading
import time
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol


class TransportError(RuntimeError):
    """The policy endpoint could not produce a response."""


@dataclass(frozen=True)
class SamplingParams:
    temperature: float = 1.0
    top_p: float = 1.0
    max_response_tokens: int = 8096

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if not (0 < self.top_p <= 1):
            raise ValueError("top_p must be in (0, 1]")


@dataclass
class PolicyTranscript:
    prompt: str
    response: str
    usage: dict | None = None
    latency: float = 0.0
    truncated: bool = False


class Policy(Protocol):
    def generate(self, prompt: str, params: SamplingParams) -> PolicyTranscript: ...


class HttpPolicy:
    """Chat-completions-compatible client over stdlib urllib.

    Retries transient transport failures with exponential backoff; a
    well-formed model response is never retried. ``raw_completions``
    switches to the plain completions endpoint for servers that apply
    no chat template.
    """

    def __init__(
        self,
        base_url: str,
        model: str,
        api_key_env: str = "POLICY_API_KEY",
        max_retries: int = 3,
        backoff_seconds: float = 1.0,
        request_timeout: float = 120.0,
        raw_completions: bool = False,
        max_in_flight: int = 8,
    ):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key_env = api_key_env
        self.max_retries = max_retries
        self.backoff_seconds = backoff_seconds
        self.request_timeout = request_timeout
        self.raw_completions = raw_completions
        self._sem = threading.BoundedSemaphore(max(1, max_in_flight))

    def _request(self, prompt: str, params: SamplingParams) -> dict:
        if self.raw_completions:
            url = f"{self.base_url}/completions"
            payload = {"model": self.model, "prompt": prompt}
        else:
            url = f"{self.base_url}/chat/completions"
            payload = {
                "model": self.model,
                "messages": [{"role": "user", "content": prompt}],
            }
        payload.update(
            temperature=params.temperature,
            top_p=params.top_p,
            max_tokens=params.max_response_tokens,
        )
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(self.api_key_env)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        request = urllib.request.Request(
            url, data=json.dumps(payload).encode("utf-8"), headers=headers
        )
        with self._sem:
            with urllib.request.urlopen(request, timeout=self.request_timeout) as resp:
                return json.loads(resp.read().decode("utf-8"))

    def generate(self, prompt: str, params: SamplingParams) -> PolicyTranscript:
        start = time.monotonic()
        last_error: Exception | None = None
        for attempt in range(self.max_retries + 1):
            try:
                body = self._request(prompt, params)
                break
            except urllib.error.HTTPError as exc:
                # 4xx is a caller bug, not transient.
                if exc.code < 500:
                    raise TransportError(f"policy endpoint rejected request: {exc}") from exc
                last_error = exc
            except (urllib.error.URLError, TimeoutError, OSError) as exc:
                last_error = exc
            if attempt < self.max_retries:
                time.sleep(self.backoff_seconds * (2**attempt))
        else:
            raise TransportError(f"policy endpoint unreachable: {last_error}")

        choice = body["choices"][0]
        if self.raw_completions:
            text = choice.get("text", "")
        else:
            text = choice.get("message", {}).get("content", "")
        return PolicyTranscript(
            prompt=prompt,
            response=text or "",
            usage=body.get("usage"),
            latency=time.monotonic() - start,
            truncated=choice.get("finish_reason") == "length",
        )


@dataclass
class MockRule:
    kind: str  # exact | contains | regex
    pattern: str
    responses: list[str]

    def matches(self, prompt: str) -> bool:
        if self.kind == "exact":
            return prompt == self.pattern
        if self.kind == "contains":
            return self.pattern in prompt
        if self.kind == "regex":
            return re.search(self.pattern, prompt, re.DOTALL) is not None
        raise ValueError(f"unknown matcher kind {self.kind!r}")


class MockPolicy:
    """Deterministic, replayable policy driven by a scripted rule table.

    The first matching rule answers; its response sequence advances one
    step per call and repeats its last entry once exhausted. Unmatched
    prompts either raise or return the configured fallback.
    """

    def __init__(
        self,
        rules: list[MockRule],
        on_unmatched: str = "error",
        fallback: str = "",
    ):
        if on_unmatched not in ("error", "fallback"):
            raise ValueError("on_unmatched must be 'error' or 'fallback'")
        self.rules = rules
        self.on_unmatched = on_unmatched
        self.fallback = fallback
        self._positions = [0] * len(rules)
        self._lock = threading.Lock()
        self.transcripts: list[PolicyTranscript] = []

    def generate(self, prompt: str, params: SamplingParams) -> PolicyTranscript:
        with self._lock:
            for idx, rule in enumerate(self.rules):
                if rule.matches(prompt):
                    pos = min(self._positions[idx], len(rule.responses) - 1)
                    self._positions[idx] += 1
                    response = rule.responses[pos]
                    transcript = PolicyTranscript(prompt=prompt, response=response)
                    self.transcripts.append(transcript)
                    return transcript
            if self.on_unmatched == "fallback":
                transcript = PolicyTranscript(prompt=prompt, response=self.fallback)
                self.transcripts.append(transcript)
                return transcript
        raise TransportError(f"no mock rule matches prompt: {prompt[:120]!r}...")

    def state(self) -> dict:
        with self._lock:
            return {"positions": list(self._positions)}

    def restore(self, state: dict) -> None:
        with self._lock:
            positions = state.get("positions", [])
            if len(positions) == len(self._positions):
                self._positions = list(positions)


def mock_from_script(path: str | Path) -> MockPolicy:
    """Load a MockPolicy from a JSON script file.

    Schema: {"rules": [{"match": {"kind": ..., "pattern": ...},
    "responses": [...]}, ...], "on_unmatched": "error"|"fallback",
    "fallback": "..."}.
    """
    with open(path, encoding="utf-8") as fh:
        script = json.load(fh)
    rules = [
        MockRule(
            kind=rule["match"].get("kind", "contains"),
            pattern=rule["match"]["pattern"],
            responses=list(rule["responses"]),
        )
        for rule in script.get("rules", [])
    ]
    for rule in rules:
        if not rule.responses:
            raise ValueError("every mock rule needs at least one response")
    return MockPolicy(
        rules,
        on_unmatched=script.get("on_unmatched", "error"),
        fallback=script.get("fallback", ""),
    )
