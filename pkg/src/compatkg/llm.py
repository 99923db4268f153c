"""Language-model client contract with two implementations.

``HttpLlmClient`` speaks the OpenAI-compatible chat-completions wire format;
``MockLlmClient`` replays scripted substring-matched responses so every test
runs offline and deterministically.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

import requests

from .errors import TransportError, UsageError

ROLES = ("system", "user", "assistant")


@dataclass(frozen=True)
class LlmMessage:
    role: str
    content: str

    def __post_init__(self):
        if self.role not in ROLES:
            raise UsageError(f"unknown message role {self.role!r}")


@dataclass(frozen=True)
class LlmRequest:
    messages: tuple[LlmMessage, ...]
    model: str = "default"
    temperature: float = 0.0

    def __post_init__(self):
        if not self.messages:
            raise UsageError("a request needs at least one message")
        if not 0.0 <= self.temperature <= 2.0:
            raise UsageError("temperature must be within [0, 2]")


@dataclass(frozen=True)
class LlmResponse:
    content: str
    usage: dict[str, int] | None = None


class LlmClient(Protocol):
    def complete(self, request: LlmRequest) -> LlmResponse: ...


class HttpLlmClient:
    """POST {endpoint}/chat/completions with bearer auth.

    Configuration comes from arguments or the LLM_ENDPOINT, LLM_API_KEY,
    LLM_MODEL and LLM_TIMEOUT_SECS environment variables. A semaphore caps
    the number of in-flight requests.
    """

    def __init__(
        self,
        endpoint: str,
        api_key: str = "",
        model: str = "default",
        timeout_secs: float = 30.0,
        max_in_flight: int = 4,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.api_key = api_key
        self.model = model
        self.timeout_secs = timeout_secs
        self._slots = threading.Semaphore(max_in_flight)

    @classmethod
    def from_env(cls) -> "HttpLlmClient":
        endpoint = os.environ.get("LLM_ENDPOINT")
        if not endpoint:
            raise UsageError("LLM_ENDPOINT is not set")
        return cls(
            endpoint=endpoint,
            api_key=os.environ.get("LLM_API_KEY", ""),
            model=os.environ.get("LLM_MODEL", "default"),
            timeout_secs=float(os.environ.get("LLM_TIMEOUT_SECS", "30")),
        )

    def complete(self, request: LlmRequest) -> LlmResponse:
        body = {
            "model": request.model if request.model != "default" else self.model,
            "messages": [
                {"role": m.role, "content": m.content} for m in request.messages
            ],
            "temperature": request.temperature,
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        with self._slots:
            try:
                response = requests.post(
                    f"{self.endpoint}/chat/completions",
                    json=body,
                    headers=headers,
                    timeout=self.timeout_secs,
                )
                response.raise_for_status()
                payload = response.json()
            except requests.RequestException as exc:
                raise TransportError(f"chat completion failed: {exc}") from exc
            except ValueError as exc:
                raise TransportError(f"malformed completion payload: {exc}") from exc
        try:
            content = payload["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"unexpected completion shape: {exc}") from exc
        return LlmResponse(content=str(content), usage=payload.get("usage"))


@dataclass
class _ScriptRule:
    match: str
    response: str
    consumed: bool = False


class MockLlmClient:
    """Scripted stand-in for the HTTP client.

    The script is a list (or JSONL file) of {"match": substring, "response":
    text} rules applied in order: a request takes the first unconsumed rule
    whose substring occurs in the concatenated message contents. Once every
    matching rule is consumed, the last match is replayed, so a single rule
    can serve repeated questions while multiple identical rules script a
    sequence (e.g. two bad queries, then a good one). No match yields an
    empty response.
    """

    def __init__(self, rules: Sequence[dict]):
        self._rules = [
            _ScriptRule(match=str(r.get("match", "")), response=str(r["response"]))
            for r in rules
        ]
        self.requests: list[LlmRequest] = []

    @classmethod
    def from_script(cls, path: str | Path) -> "MockLlmClient":
        rules = []
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if line.strip():
                rules.append(json.loads(line))
        return cls(rules)

    def complete(self, request: LlmRequest) -> LlmResponse:
        self.requests.append(request)
        haystack = "\n".join(m.content for m in request.messages)
        last_match: _ScriptRule | None = None
        for rule in self._rules:
            if rule.match in haystack:
                last_match = rule
                if not rule.consumed:
                    rule.consumed = True
                    return LlmResponse(content=rule.response)
        if last_match is not None:
            return LlmResponse(content=last_match.response)
        return LlmResponse(content="")
