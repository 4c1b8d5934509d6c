"""Completion backends behind one interface.

The stub backend is deterministic and extractive — contextual prompts echo
the highest-scoring saved memory, generic prompts answer exactly
"I DO NOT KNOW." — which makes every automated test model-free. The remote
backend speaks the JSON chat-completion protocol
``POST {"model", "messages", "temperature", "max_tokens"}`` and returns the
first choice, retrying transient failures with exponential backoff.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import httpx

from .errors import BackendError, ValidationError
from .prompting import AssembledPrompt, PromptMode

DEFAULT_MODEL_NAME = "llama-3-70b-instruct"
MAX_TOKENS_CEILING = 8192

STUB_CONTEXT_PREFIX = "Based on your saved context: "
STUB_UNKNOWN_ANSWER = "I DO NOT KNOW."


@dataclass(frozen=True)
class GatewayConfig:
    backend: str = "stub"  # "stub" | "remote"
    endpoint_url: str = ""
    model_name: str = DEFAULT_MODEL_NAME
    api_key_header: str = "Authorization"
    api_key_value: str = ""
    timeout: float = 30.0
    retries: int = 2
    backoff_initial: float = 0.25

    def __post_init__(self) -> None:
        if self.backend not in ("stub", "remote"):
            raise ValidationError(f"unknown gateway backend {self.backend!r}")
        if self.backend == "remote" and not self.endpoint_url:
            raise ValidationError("remote gateway requires endpoint_url")
        if self.retries < 0:
            raise ValidationError("retries must be >= 0")
        if self.timeout <= 0 or self.backoff_initial < 0:
            raise ValidationError("timeout must be positive and backoff non-negative")


@dataclass(frozen=True)
class CompletionRequest:
    prompt: AssembledPrompt
    temperature: float = 0.7
    max_tokens: int = 512
    model_name: str = DEFAULT_MODEL_NAME

    def __post_init__(self) -> None:
        if not math.isfinite(self.temperature) or self.temperature < 0:
            raise ValidationError(f"temperature must be finite and >= 0, got {self.temperature!r}")
        if not 1 <= self.max_tokens <= MAX_TOKENS_CEILING:
            raise ValidationError(
                f"max_tokens must be in [1, {MAX_TOKENS_CEILING}], got {self.max_tokens!r}"
            )


@dataclass(frozen=True)
class CompletionResult:
    text: str
    backend: str  # "stub" | "remote"
    latency: float


class StubCompleter:
    """Deterministic extractive completer; never errors."""

    def complete(self, request: CompletionRequest) -> CompletionResult:
        started = time.perf_counter()
        if request.prompt.mode is PromptMode.CONTEXTUAL:
            text = STUB_CONTEXT_PREFIX + request.prompt.context_items[0].text
        else:
            text = STUB_UNKNOWN_ANSWER
        return CompletionResult(text=text, backend="stub", latency=time.perf_counter() - started)

    def close(self) -> None:
        pass


class RemoteCompleter:
    """Chat-completion HTTP client with bounded retries."""

    def __init__(
        self,
        config: GatewayConfig,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self._config = config
        self._sleep = sleep
        headers = {}
        if config.api_key_value:
            headers[config.api_key_header] = config.api_key_value
        self._client = httpx.Client(timeout=config.timeout, headers=headers, transport=transport)

    def complete(self, request: CompletionRequest) -> CompletionResult:
        prompt = request.prompt
        body = {
            "model": request.model_name,
            "messages": [
                {"role": "system", "content": prompt.render_system()},
                {"role": "user", "content": prompt.user_query},
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        started = time.perf_counter()
        response = self._post_with_retries(body)
        text = self._extract_text(response)
        return CompletionResult(
            text=text, backend="remote", latency=time.perf_counter() - started
        )

    def _post_with_retries(self, body: dict) -> httpx.Response:
        attempts = self._config.retries + 1
        backoff = self._config.backoff_initial
        last_error: BackendError | None = None
        for attempt in range(attempts):
            try:
                response = self._client.post(self._config.endpoint_url, json=body)
            except httpx.TimeoutException as exc:
                last_error = BackendError(f"completion timed out: {exc}", reason="timeout")
            except httpx.HTTPError as exc:
                last_error = BackendError(f"completion transport failed: {exc}", reason="transport")
            else:
                if 200 <= response.status_code < 300:
                    return response
                last_error = BackendError(
                    f"completion service returned HTTP {response.status_code}", reason="status"
                )
                if response.status_code < 500:
                    # Client errors are deterministic; retrying cannot help.
                    raise last_error
            if attempt + 1 < attempts:
                self._sleep(backoff * (2**attempt))
        raise last_error

    @staticmethod
    def _extract_text(response: httpx.Response) -> str:
        try:
            payload = response.json()
        except ValueError as exc:
            raise BackendError("completion response is not JSON", reason="protocol") from exc
        try:
            choices = payload["choices"]
            if not choices:
                raise BackendError("completion response has no choices", reason="protocol")
            text = choices[0]["message"]["content"]
        except (KeyError, TypeError, IndexError) as exc:
            raise BackendError(f"malformed completion response: {exc}", reason="protocol") from exc
        if not isinstance(text, str) or not text:
            raise BackendError("completion response text is empty", reason="protocol")
        return text

    def close(self) -> None:
        self._client.close()


def make_completer(
    config: GatewayConfig | None = None,
    transport: httpx.BaseTransport | None = None,
    sleep: Callable[[float], None] = time.sleep,
) -> StubCompleter | RemoteCompleter:
    cfg = config or GatewayConfig()
    if cfg.backend == "stub":
        return StubCompleter()
    return RemoteCompleter(cfg, transport=transport, sleep=sleep)
