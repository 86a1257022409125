"""Provider-agnostic chat-completion client.

Two providers: an HTTP provider speaking the minimal chat-completion JSON
dialect of common local-model servers (``POST {model, messages, temperature}``
returning ``{"choices": [{"message": {"content": ...}}]}``), and a scripted
provider that replays a fixed queue of responses for tests and desk-scale
evaluation. Transport failures are retried twice with exponential backoff;
the pipeline's semantic retries are counted separately.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import httpx

from .errors import LlmError, LlmTimeoutError, ParseError

logger = logging.getLogger(__name__)

DEFAULT_MODEL = "llama3.3:70b"
TRANSPORT_RETRIES = 2
DEFAULT_TIMEOUT_S = 120.0
DEFAULT_MAX_IN_FLIGHT = 4


@dataclass(frozen=True)
class ChatRequest:
    """One conversation state sent to the model.

    ``user_turns`` holds the original prompt plus any re-prompt/correction
    messages; ``assistant_turns`` holds the model's earlier replies so the
    wire messages interleave and prior context (e.g. the SQL being corrected)
    is retained.
    """

    model: str
    system: str
    user_turns: tuple[str, ...]
    assistant_turns: tuple[str, ...] = ()
    temperature: float = 0.0

    def __init__(
        self,
        model: str,
        system: str,
        user_turns,
        assistant_turns=(),
        temperature: float = 0.0,
    ):
        object.__setattr__(self, "model", model)
        object.__setattr__(self, "system", system)
        object.__setattr__(self, "user_turns", tuple(user_turns))
        object.__setattr__(self, "assistant_turns", tuple(assistant_turns))
        object.__setattr__(self, "temperature", temperature)
        if not self.user_turns:
            raise ValueError("ChatRequest needs at least one user turn")
        if temperature < 0:
            raise ValueError("temperature must be >= 0")

    def messages(self) -> list[dict[str, str]]:
        msgs = [{"role": "system", "content": self.system}]
        for i, user in enumerate(self.user_turns):
            msgs.append({"role": "user", "content": user})
            if i < len(self.assistant_turns):
                msgs.append({"role": "assistant", "content": self.assistant_turns[i]})
        return msgs

    def extended(self, assistant_text: str, next_user_turn: str) -> "ChatRequest":
        """The follow-up request after the model answered ``assistant_text``."""
        return ChatRequest(
            model=self.model,
            system=self.system,
            user_turns=self.user_turns + (next_user_turn,),
            assistant_turns=self.assistant_turns + (assistant_text,),
            temperature=self.temperature,
        )


@dataclass(frozen=True)
class ChatResponse:
    text: str
    latency_s: float = 0.0
    provider_meta: dict = field(default_factory=dict)


class ChatProvider(Protocol):
    def send(self, request: ChatRequest, timeout_s: float) -> ChatResponse: ...

    def ping(self) -> bool: ...


class ScriptedProvider:
    """Replays a fixed queue of response strings, one per complete() call."""

    def __init__(self, responses: list[str]):
        self._responses = list(responses)
        self._lock = threading.Lock()
        self.calls = 0

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedProvider":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(doc, list) or not all(isinstance(s, str) for s in doc):
            raise ParseError(f"{path}: scripted responses must be a JSON array of strings")
        return cls(doc)

    @property
    def remaining(self) -> int:
        return len(self._responses) - self.calls

    def send(self, request: ChatRequest, timeout_s: float) -> ChatResponse:
        with self._lock:
            if self.calls >= len(self._responses):
                raise LlmError("script exhausted")
            text = self._responses[self.calls]
            self.calls += 1
        return ChatResponse(text=text, latency_s=0.0, provider_meta={"provider": "scripted"})

    def ping(self) -> bool:
        return True


class HttpChatProvider:
    """Minimal chat-completion client for local model servers."""

    def __init__(self, url: str):
        self.url = url
        self._client = httpx.Client()

    def send(self, request: ChatRequest, timeout_s: float) -> ChatResponse:
        payload = {
            "model": request.model,
            "messages": request.messages(),
            "temperature": request.temperature,
            "stream": False,
        }
        started = time.monotonic()
        try:
            resp = self._client.post(self.url, json=payload, timeout=timeout_s)
        except httpx.TimeoutException as exc:
            raise LlmTimeoutError(f"LLM call exceeded {timeout_s}s: {exc}") from exc
        resp.raise_for_status()
        body = resp.json()
        try:
            text = body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise LlmError(f"unexpected response shape from {self.url}: {exc}") from exc
        return ChatResponse(
            text=text,
            latency_s=time.monotonic() - started,
            provider_meta={"provider": "http", "url": self.url},
        )

    def ping(self) -> bool:
        try:
            base = self.url.split("/v1/")[0] if "/v1/" in self.url else self.url
            self._client.get(base, timeout=5.0)
            return True
        except httpx.HTTPError:
            return False


class LlmClient:
    """Retrying wrapper around a provider, with a global in-flight limit."""

    def __init__(
        self,
        provider: ChatProvider,
        default_model: str = DEFAULT_MODEL,
        timeout_s: float = DEFAULT_TIMEOUT_S,
        max_in_flight: int = DEFAULT_MAX_IN_FLIGHT,
    ):
        self.provider = provider
        self.default_model = default_model
        self.timeout_s = timeout_s
        self._slots = threading.Semaphore(max_in_flight)

    def complete(self, request: ChatRequest) -> ChatResponse:
        """Send the request; retry transient transport failures twice."""
        last_exc: Exception | None = None
        for attempt in range(1 + TRANSPORT_RETRIES):
            if attempt:
                time.sleep(0.25 * (2 ** (attempt - 1)))
            with self._slots:
                try:
                    response = self.provider.send(request, self.timeout_s)
                    logger.debug(
                        "llm call ok (attempt %d): %d user turns -> %d chars",
                        attempt + 1,
                        len(request.user_turns),
                        len(response.text),
                    )
                    return response
                except (httpx.HTTPStatusError, httpx.TransportError) as exc:
                    # timeouts and provider-declared failures (LlmError) propagate
                    last_exc = exc
                    logger.warning("llm transport failure (attempt %d): %s", attempt + 1, exc)
        raise LlmError(
            f"LLM endpoint failed after {TRANSPORT_RETRIES} retries: {last_exc}"
        ) from last_exc

    def ping(self) -> bool:
        return self.provider.ping()


def make_client(
    spec: str,
    default_model: str = DEFAULT_MODEL,
    timeout_s: float = DEFAULT_TIMEOUT_S,
    max_in_flight: int = DEFAULT_MAX_IN_FLIGHT,
) -> LlmClient:
    """Build a client from a provider spec: ``scripted:<path>`` or an HTTP URL."""
    if spec.startswith("scripted:"):
        provider: ChatProvider = ScriptedProvider.from_file(spec.split(":", 1)[1])
    elif spec.startswith(("http://", "https://")):
        provider = HttpChatProvider(spec)
    else:
        raise ValueError(f"unrecognized llm spec: {spec!r} (use scripted:<path> or an http(s) URL)")
    return LlmClient(provider, default_model=default_model, timeout_s=timeout_s, max_in_flight=max_in_flight)
