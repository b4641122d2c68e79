"""Chat-completion client with bounded retries."""
from __future__ import annotations

import os
import time
from dataclasses import dataclass

import httpx

from ..lexicon import BehaviorLexicon
from .prompt import PromptSpec, build_prompt, user_message

RETRY_STATUS = frozenset({429, 500, 502, 503, 504})


class GenerationError(RuntimeError):
    """Generation failed; ``status`` and ``body`` are set for HTTP failures."""

    def __init__(self, message: str, status: int | None = None, body: str | None = None):
        super().__init__(message)
        self.status = status
        self.body = body


@dataclass(frozen=True)
class EndpointConfig:
    base_url: str = "https://api.openai.com/v1"
    model: str = "gpt-4o"
    api_key_env: str = "OPENAI_API_KEY"
    timeout: float = 60.0
    max_attempts: int = 4
    backoff: float = 1.0
    max_backoff: float = 30.0

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be at least 1")
        if self.backoff < 0:
            raise ValueError("backoff must be non-negative")


class ChatClient:
    """Minimal client for the ``/chat/completions`` wire format.

    Parameters
    ----------
    config : EndpointConfig
    transport : httpx.BaseTransport, optional
        Injected transport, used by tests to stand in for a server.
    sleep : callable, optional
        Delay function between retries.
    """

    def __init__(self, config: EndpointConfig | None = None, *, transport=None,
                 sleep=time.sleep, api_key: str | None = None):
        self.config = config or EndpointConfig()
        key = api_key if api_key is not None else os.environ.get(self.config.api_key_env)
        headers = {"Content-Type": "application/json"}
        if key:
            headers["Authorization"] = f"Bearer {key}"
        self._http = httpx.Client(base_url=self.config.base_url.rstrip("/") + "/",
                                  headers=headers, timeout=self.config.timeout,
                                  transport=transport)
        self._sleep = sleep

    def close(self) -> None:
        self._http.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _delay(self, attempt: int) -> float:
        return min(self.config.max_backoff, self.config.backoff * 2 ** attempt)

    def complete(self, system: str, user: str, *, temperature: float, max_tokens: int) -> str:
        payload = {
            "model": self.config.model,
            "messages": [{"role": "system", "content": system},
                         {"role": "user", "content": user}],
            "temperature": temperature,
            "max_tokens": max_tokens,
        }
        last_error = None
        for attempt in range(self.config.max_attempts):
            if attempt:
                self._sleep(self._delay(attempt - 1))
            try:
                response = self._http.post("chat/completions", json=payload)
            except httpx.TransportError as exc:
                last_error = GenerationError(f"transport error: {exc}")
                continue
            if response.status_code in RETRY_STATUS:
                last_error = GenerationError(
                    f"HTTP {response.status_code} after {attempt + 1} attempt(s)",
                    response.status_code, response.text[:500])
                continue
            if response.status_code >= 400:
                raise GenerationError(f"HTTP {response.status_code}: {response.text[:200]}",
                                      response.status_code, response.text[:500])
            try:
                text = response.json()["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError):
                raise GenerationError("response is not a chat completion",
                                      response.status_code, response.text[:500]) from None
            if not isinstance(text, str) or not text.strip():
                raise GenerationError("empty completion", response.status_code)
            return text
        raise GenerationError(
            f"gave up after {self.config.max_attempts} attempts: {last_error}",
            last_error.status, last_error.body)


def generate_remote(spec: PromptSpec, client: ChatClient,
                    lex: BehaviorLexicon | None = None) -> str:
    """Request one turn; the completion text is returned verbatim."""
    return client.complete(build_prompt(spec, lex), user_message(spec),
                           temperature=spec.temperature, max_tokens=spec.max_tokens)
