"""Completion backends.

Two implementations of one interface: a live chat-completions HTTP client
for play, and a scripted backend that replays canned responses in order as
the deterministic test oracle. The live client never retries; retry policy
belongs to the engine.
"""

from __future__ import annotations

import os
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import Any, Iterable, Mapping

import requests

from .prompts import YES_NO_INSTRUCTION

ENV_BASE_URL = "DL_API_BASE_URL"
ENV_API_KEY = "DL_API_KEY"
ENV_MODEL = "DL_MODEL"


@dataclass(frozen=True)
class GenerationParams:
    model_name: str = ""
    temperature: float = 1.0
    max_tokens: int = 256
    timeout_seconds: float = 30.0

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")
        if self.timeout_seconds <= 0:
            raise ValueError("timeout must be positive")


# Trigger checks only ever need one token (YES or NO).
SIMULATION_PARAMS = GenerationParams(max_tokens=256)
TRIGGER_CHECK_PARAMS = GenerationParams(max_tokens=4)


class BackendError(Exception):
    """Base class for completion failures."""


class BackendTimeout(BackendError):
    pass


class HttpStatusError(BackendError):
    def __init__(self, status_code: int, body: str = ""):
        self.status_code = status_code
        detail = f": {body[:200]}" if body else ""
        super().__init__(f"completion endpoint returned HTTP {status_code}{detail}")


class MalformedResponse(BackendError):
    pass


class QueueExhausted(BackendError):
    pass


class PromptKind(Enum):
    SIMULATION = "simulation"
    TRIGGER_CHECK = "trigger_check"


def classify_prompt(prompt: str) -> PromptKind:
    """Trigger-check prompts are recognized by their YES/NO instruction;
    it dominates if a prompt somehow contains both instructions."""
    if YES_NO_INSTRUCTION in prompt:
        return PromptKind.TRIGGER_CHECK
    return PromptKind.SIMULATION


class CompletionBackend(ABC):
    @abstractmethod
    def complete(self, prompt: str, params: GenerationParams) -> str:
        """Return raw completion text for ``prompt`` or raise BackendError."""


# --- scripted backend ---------------------------------------------------------


class Matcher(ABC):
    @abstractmethod
    def matches(self, prompt: str) -> bool: ...

    @abstractmethod
    def to_spec(self) -> Any: ...


@dataclass(frozen=True)
class MatchAny(Matcher):
    def matches(self, prompt: str) -> bool:
        return True

    def to_spec(self):
        return "any"


@dataclass(frozen=True)
class PromptContains(Matcher):
    substring: str

    def matches(self, prompt: str) -> bool:
        return self.substring in prompt

    def to_spec(self):
        return {"contains": self.substring}


@dataclass(frozen=True)
class IsSimulation(Matcher):
    def matches(self, prompt: str) -> bool:
        return classify_prompt(prompt) is PromptKind.SIMULATION

    def to_spec(self):
        return "simulation"


@dataclass(frozen=True)
class IsTriggerCheck(Matcher):
    def matches(self, prompt: str) -> bool:
        return classify_prompt(prompt) is PromptKind.TRIGGER_CHECK

    def to_spec(self):
        return "trigger_check"


def matcher_from_spec(value: Any) -> Matcher:
    if isinstance(value, str):
        table = {
            "any": MatchAny(),
            "simulation": IsSimulation(),
            "trigger_check": IsTriggerCheck(),
        }
        if value in table:
            return table[value]
        raise ValueError(f"unknown matcher {value!r}")
    if isinstance(value, Mapping) and isinstance(value.get("contains"), str):
        return PromptContains(value["contains"])
    raise ValueError(f"unknown matcher spec {value!r}")


@dataclass(frozen=True)
class ScriptedRequest:
    """One backend call as seen by the scripted backend (the request log is
    what tests assert call counts and ordering against)."""

    prompt: str
    kind: PromptKind
    response: str | None


class ScriptedBackend(CompletionBackend):
    """Replays a queue of (matcher, response) pairs.

    Each call consumes the first queued entry whose matcher accepts the
    prompt; a call no entry matches is an error. Queue consumption is
    serialized internally, so one instance may serve concurrent sessions.
    """

    def __init__(self, responses: Iterable[tuple[Matcher, str]] = ()):
        self._queue: list[tuple[Matcher, str]] = list(responses)
        self._lock = threading.Lock()
        self.request_log: list[ScriptedRequest] = []

    def complete(self, prompt: str, params: GenerationParams) -> str:
        kind = classify_prompt(prompt)
        with self._lock:
            for i, (matcher, response) in enumerate(self._queue):
                if matcher.matches(prompt):
                    del self._queue[i]
                    self.request_log.append(
                        ScriptedRequest(prompt=prompt, kind=kind, response=response)
                    )
                    return response
            self.request_log.append(ScriptedRequest(prompt=prompt, kind=kind, response=None))
            raise QueueExhausted(
                f"no scripted response matches a {kind.value} prompt "
                f"({len(self._queue)} entries left)"
            )

    def remaining(self) -> list[tuple[Matcher, str]]:
        with self._lock:
            return list(self._queue)

    def to_spec(self) -> dict:
        return {
            "kind": "scripted",
            "responses": [
                {"match": matcher.to_spec(), "response": response}
                for matcher, response in self.remaining()
            ],
        }

    @classmethod
    def from_spec(cls, spec: Mapping[str, Any]) -> "ScriptedBackend":
        entries = spec.get("responses")
        if not isinstance(entries, list):
            raise ValueError("scripted backend spec needs a 'responses' list")
        queue = []
        for entry in entries:
            if not isinstance(entry, Mapping) or "response" not in entry:
                raise ValueError(f"bad scripted response entry: {entry!r}")
            queue.append(
                (matcher_from_spec(entry.get("match", "any")), str(entry["response"]))
            )
        return cls(queue)


# --- live HTTP backend --------------------------------------------------------


class HttpCompletionBackend(CompletionBackend):
    """Minimal chat-completions client: the whole prompt goes out as a single
    user message and the first choice's content comes back."""

    def __init__(
        self,
        base_url: str,
        api_key: str = "",
        model: str = "",
        session: requests.Session | None = None,
    ):
        if not base_url:
            raise ValueError("base_url is required")
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key
        self.model = model
        self._session = session or requests.Session()

    @classmethod
    def from_env(cls) -> "HttpCompletionBackend":
        base_url = os.environ.get(ENV_BASE_URL, "")
        if not base_url:
            raise ValueError(f"{ENV_BASE_URL} is not set")
        return cls(
            base_url=base_url,
            api_key=os.environ.get(ENV_API_KEY, ""),
            model=os.environ.get(ENV_MODEL, ""),
        )

    def complete(self, prompt: str, params: GenerationParams) -> str:
        payload = {
            "model": params.model_name or self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            response = self._session.post(
                f"{self.base_url}/chat/completions",
                json=payload,
                headers=headers,
                timeout=params.timeout_seconds,
            )
        except requests.Timeout as exc:
            raise BackendTimeout(f"completion timed out after {params.timeout_seconds}s") from exc
        except requests.RequestException as exc:
            raise BackendError(f"completion request failed: {exc}") from exc
        if response.status_code != 200:
            raise HttpStatusError(response.status_code, response.text)
        try:
            content = response.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise MalformedResponse(f"unexpected completion payload: {exc}") from exc
        if not isinstance(content, str):
            raise MalformedResponse("completion content is not a string")
        return content

    def to_spec(self) -> dict:
        # The API key is environment-only, never serialized.
        return {"kind": "live", "base_url": self.base_url, "model": self.model}


def backend_from_spec(spec: Mapping[str, Any]) -> CompletionBackend:
    kind = spec.get("kind")
    if kind == "scripted":
        return ScriptedBackend.from_spec(spec)
    if kind == "live":
        base_url = spec.get("base_url") or os.environ.get(ENV_BASE_URL, "")
        if not base_url:
            raise ValueError(f"live backend needs base_url or {ENV_BASE_URL}")
        return HttpCompletionBackend(
            base_url=base_url,
            api_key=os.environ.get(ENV_API_KEY, ""),
            model=spec.get("model") or os.environ.get(ENV_MODEL, ""),
        )
    raise ValueError(f"unknown backend kind {kind!r}")


def backend_to_spec(backend: CompletionBackend) -> dict:
    to_spec = getattr(backend, "to_spec", None)
    if to_spec is None:
        raise TypeError(f"backend {type(backend).__name__} is not serializable")
    return to_spec()
