"""Chat-completion gateway: live HTTP backend and deterministic scripted backend.

No other module talks to the network for completions; everything goes through
``BaseGateway.complete``.
"""

import hashlib
import logging
import threading
import time
from abc import ABC, abstractmethod
from collections.abc import Callable, Mapping, Sequence
from pathlib import Path
from typing import Any, Optional, Self

import httpx
import orjson

from src.pipeline.config import RunConfig
from src.pipeline.errors import (
    AuthenticationError,
    ConfigError,
    ProviderContentError,
    ScriptUnderrunError,
    TransportError,
)
from src.schemas.models import BackendTag, CompletionRequest, CompletionResponse, TokenUsage

logger = logging.getLogger(__name__)

RETRYABLE_STATUS = {429, 500, 502, 503, 504}


def prompt_digest(prompt: str) -> str:
    """SHA-256 hex digest used to key scripted answers."""
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


class BaseGateway(ABC):
    """Single point of contact with a completion backend."""

    backend_tag: BackendTag

    def __init__(
        self,
        model_id: str,
        temperature: float = 0.0,
        max_output_tokens: int = 4096,
        seed_hint: Optional[int] = None,
    ) -> None:
        self.model_id = model_id
        self.temperature = temperature
        self.max_output_tokens = max_output_tokens
        self.seed_hint = seed_hint

    def request(self, prompt: str) -> CompletionRequest:
        """Build a request with this gateway's defaults."""
        return CompletionRequest(
            model_id=self.model_id,
            prompt=prompt,
            temperature=self.temperature,
            max_output_tokens=self.max_output_tokens,
            seed_hint=self.seed_hint,
        )

    def ask(self, prompt: str) -> CompletionResponse:
        """Complete a prompt with the default request settings."""
        return self.complete(self.request(prompt))

    @abstractmethod
    def complete(self, request: CompletionRequest) -> CompletionResponse:
        """Return the raw completion text for a request."""

    def close(self) -> None:
        """Release backend resources; no-op unless the backend holds a connection."""

    def __enter__(self) -> Self:
        return self

    def __exit__(self, *exc_info: object) -> None:
        self.close()


class HttpGateway(BaseGateway):
    """Chat-completion HTTP endpoint with capped exponential backoff."""

    backend_tag = BackendTag.LIVE

    def __init__(
        self,
        endpoint: str,
        model_id: str,
        api_key: str,
        temperature: float = 0.0,
        max_output_tokens: int = 4096,
        timeout_s: float = 120.0,
        max_retries: int = 3,
        backoff_base_s: float = 1.0,
        backoff_cap_s: float = 4.0,
        max_concurrency: int = 4,
        seed_hint: Optional[int] = None,
        client: Optional[httpx.Client] = None,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        super().__init__(model_id, temperature, max_output_tokens, seed_hint)
        self.endpoint = endpoint
        self.max_retries = max_retries
        self.backoff_base_s = backoff_base_s
        self.backoff_cap_s = backoff_cap_s
        self._headers = {"Authorization": f"Bearer {api_key}", "Content-Type": "application/json"}
        self._client = client or httpx.Client(timeout=timeout_s)
        self._limiter = threading.BoundedSemaphore(max_concurrency)
        self._sleep = sleep

    def close(self) -> None:
        """Close the pooled HTTP connections."""
        self._client.close()

    def _payload(self, request: CompletionRequest) -> dict[str, Any]:
        payload: dict[str, Any] = {
            "model": request.model_id,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        }
        if request.seed_hint is not None:
            payload["seed"] = request.seed_hint
        return payload

    def _backoff(self, attempt: int, response: Optional[httpx.Response]) -> float:
        if response is not None and "Retry-After" in response.headers:
            try:
                return min(float(response.headers["Retry-After"]), self.backoff_cap_s * 8)
            except ValueError:
                pass
        return float(min(self.backoff_base_s * 2**attempt, self.backoff_cap_s))

    @staticmethod
    def _parse(response: httpx.Response) -> CompletionResponse:
        try:
            body = response.json()
            text = body["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as e:
            raise ProviderContentError(
                f"Malformed completion payload: {response.text[:200]}"
            ) from e
        usage = body.get("usage")
        return CompletionResponse(
            text=text or "",
            usage=TokenUsage(**usage) if isinstance(usage, dict) else None,
            backend_tag=BackendTag.LIVE,
        )

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        """POST the request; retry transport and rate-limit failures only."""
        last_error = ""
        with self._limiter:
            for attempt in range(self.max_retries):
                response: Optional[httpx.Response] = None
                try:
                    response = self._client.post(
                        self.endpoint, json=self._payload(request), headers=self._headers
                    )
                except httpx.TransportError as e:
                    last_error = f"{type(e).__name__}: {e}"
                else:
                    if response.status_code == 200:
                        return self._parse(response)
                    if response.status_code in (401, 403):
                        raise AuthenticationError(
                            f"Provider rejected credentials (HTTP {response.status_code})"
                        )
                    if response.status_code not in RETRYABLE_STATUS:
                        raise ProviderContentError(
                            f"HTTP {response.status_code}: {response.text[:200]}"
                        )
                    last_error = f"HTTP {response.status_code}"

                if attempt + 1 < self.max_retries:
                    delay = self._backoff(attempt, response)
                    logger.warning(
                        f"Completion attempt {attempt + 1}/{self.max_retries} "
                        f"failed ({last_error}), retrying in {delay:.1f}s"
                    )
                    self._sleep(delay)

        raise TransportError(f"Completion failed after {self.max_retries} attempts: {last_error}")


class ScriptedGateway(BaseGateway):
    """Deterministic playback of recorded answers.

    Answers keyed by prompt digest win; any other prompt consumes the next
    answer of the strict sequence. Calls are serialized, so playback is a pure
    function of (script, call history).
    """

    backend_tag = BackendTag.SCRIPTED

    def __init__(
        self,
        keyed: Optional[Mapping[str, str]] = None,
        sequence: Optional[Sequence[str]] = None,
        model_id: str = "scripted",
    ) -> None:
        super().__init__(model_id)
        self.keyed = dict(keyed or {})
        self.sequence = list(sequence or [])
        if not self.keyed and not self.sequence:
            raise ConfigError("Scripted backend needs a non-empty script")
        self.history: list[CompletionRequest] = []
        self._cursor = 0
        self._lock = threading.Lock()

    @property
    def is_sequential(self) -> bool:
        """True when playback depends on call order."""
        return bool(self.sequence)

    @property
    def remaining(self) -> int:
        """Unconsumed sequence answers."""
        return len(self.sequence) - self._cursor

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        """Return the scripted answer for this prompt."""
        with self._lock:
            self.history.append(request)
            digest = prompt_digest(request.prompt)
            if digest in self.keyed:
                return CompletionResponse(text=self.keyed[digest], backend_tag=BackendTag.SCRIPTED)
            if self._cursor >= len(self.sequence):
                raise ScriptUnderrunError(
                    f"Script underrun at call {len(self.history)}: "
                    f"no answer for prompt {digest[:12]}"
                )
            text = self.sequence[self._cursor]
            self._cursor += 1
            return CompletionResponse(text=text, backend_tag=BackendTag.SCRIPTED)


def scripted_backend(script: Any, model_id: str = "scripted") -> ScriptedGateway:
    """Build a scripted gateway from a list, a digest mapping, or {"keyed", "sequence"}."""
    if isinstance(script, Mapping) and ("keyed" in script or "sequence" in script):
        return ScriptedGateway(script.get("keyed"), script.get("sequence"), model_id=model_id)
    if isinstance(script, Mapping):
        return ScriptedGateway(keyed=script, model_id=model_id)
    if isinstance(script, Sequence) and not isinstance(script, str):
        return ScriptedGateway(sequence=script, model_id=model_id)
    raise ConfigError(f"Unsupported script type: {type(script).__name__}")


def load_script(path: Path) -> ScriptedGateway:
    """Read a scripted backend file."""
    if not path.exists():
        raise ConfigError(f"Script file not found: {path}")
    return scripted_backend(orjson.loads(path.read_bytes()))


def build_gateway(config: RunConfig, model_id: Optional[str] = None) -> BaseGateway:
    """Gateway for the configured backend."""
    if config.backend == "scripted":
        if config.script_path is None:
            raise ConfigError("backend 'scripted' needs script_path")
        return load_script(config.script_path)

    model = model_id or config.model_id
    if not model:
        raise ConfigError("model_id must be configured for the live backend")
    return HttpGateway(
        endpoint=config.endpoint,
        model_id=model,
        api_key=config.api_key(),
        temperature=config.temperature,
        max_output_tokens=config.max_output_tokens,
        timeout_s=config.request_timeout_s,
        max_retries=config.max_retries,
        backoff_base_s=config.backoff_base_s,
        max_concurrency=config.max_concurrency,
        seed_hint=config.seed,
    )
