"""Generation backends: an OpenAI-compatible HTTP client and a scripted replayer."""

from __future__ import annotations

import enum
import hashlib
import json
import logging
import os
import random
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import httpx

from .errors import ConfigError, EndpointError, FixtureMiss

log = logging.getLogger(__name__)

DEFAULT_TEMPERATURE = 0.0
DEFAULT_MAX_TOKENS = 8192
DEFAULT_CONCURRENCY = 4
API_KEY_ENV = "ROT_API_KEY"
ENDPOINT_ENV = "ROT_ENDPOINT"

RETRY_BASE_S = 1.0
RETRY_FACTOR = 2.0
RETRY_ATTEMPTS = 5


class BackendKind(str, enum.Enum):
    REMOTE = "remote"
    SCRIPTED = "scripted"


@dataclass(frozen=True)
class GenerationRequest:
    messages: tuple[tuple[str, str], ...]
    model_id: str
    temperature: float = DEFAULT_TEMPERATURE
    max_tokens: int = DEFAULT_MAX_TOKENS
    request_id: str = ""

    def __post_init__(self):
        msgs = tuple((str(getattr(r, "value", r)), str(c)) for r, c in self.messages)
        object.__setattr__(self, "messages", msgs)
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be at least 1")
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")


@dataclass(frozen=True)
class GenerationResult:
    text: str
    prompt_tokens: int | None
    completion_tokens: int | None
    latency_ms: int
    backend: BackendKind
    approximate_tokens: bool = False


def request_hash(messages: Sequence[tuple[str, str]], model_id: str) -> str:
    """Stable content hash of a prompt, independent of on-disk key order."""
    payload = {
        "messages": [{"role": str(getattr(r, "value", r)), "content": c} for r, c in messages],
        "model": model_id,
    }
    canon = json.dumps(payload, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def whitespace_tokens(text: str) -> int:
    return len(text.split())


class ScriptedBackend:
    """Replays canned completions keyed by :func:`request_hash`.

    The store is a JSONL file of ``{"hash", "model", "text", "note"}``; later
    lines override earlier ones with the same hash.
    """

    kind = BackendKind.SCRIPTED

    def __init__(self, store: str | os.PathLike | None = None, entries: dict[str, str] | None = None):
        self.path = Path(store) if store is not None else None
        self._texts: dict[str, str] = {}
        self._lock = threading.Lock()
        if self.path is not None and self.path.exists():
            self._load()
        if entries:
            self._texts.update(entries)

    def _load(self) -> None:
        with open(self.path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                entry = json.loads(line)
                if entry["hash"] in self._texts:
                    log.warning("fixture %s redefined at line %d; last one wins", entry["hash"], lineno)
                self._texts[entry["hash"]] = entry["text"]

    def __len__(self) -> int:
        return len(self._texts)

    def record_fixture(self, request: GenerationRequest, text: str, note: str | None = None) -> dict:
        key = request_hash(request.messages, request.model_id)
        entry = {"hash": key, "model": request.model_id, "text": text, "note": note}
        with self._lock:
            if key in self._texts:
                log.warning("fixture %s already recorded; overwriting (last write wins)", key)
            if self.path is not None:
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(entry, ensure_ascii=False) + "\n")
                    fh.flush()
            self._texts[key] = text
        return entry

    def generate(self, request: GenerationRequest) -> GenerationResult:
        start = time.monotonic()
        key = request_hash(request.messages, request.model_id)
        try:
            text = self._texts[key]
        except KeyError:
            raise FixtureMiss(f"no scripted fixture for hash {key}") from None
        return GenerationResult(
            text=text,
            prompt_tokens=None,
            completion_tokens=whitespace_tokens(text),
            latency_ms=int((time.monotonic() - start) * 1000),
            backend=self.kind,
            approximate_tokens=True,
        )


def _retryable(status: int) -> bool:
    return status == 429 or 500 <= status < 600


@dataclass
class RemoteBackend:
    """Client for ``POST {endpoint}/v1/chat/completions``.

    ``endpoint`` may be given with or without the trailing ``/v1``. Transient
    failures (429, 5xx, timeouts, connection errors) are retried with full
    jitter backoff: sleep ~ U(0, base * factor**attempt).
    """

    endpoint: str
    api_key: str
    timeout_s: float = 300.0
    max_in_flight: int = DEFAULT_CONCURRENCY
    attempts: int = RETRY_ATTEMPTS
    base_delay_s: float = RETRY_BASE_S
    factor: float = RETRY_FACTOR
    sleep: Callable[[float], None] | None = None  # defaults to time.sleep
    rng: random.Random = field(default_factory=random.Random)
    transport: httpx.BaseTransport | None = None

    kind = BackendKind.REMOTE

    def __post_init__(self):
        if not self.api_key:
            raise ConfigError(f"missing API key; set {API_KEY_ENV}")
        if not self.endpoint:
            raise ConfigError(f"missing endpoint; pass --endpoint or set {ENDPOINT_ENV}")
        if self.sleep is None:
            self.sleep = time.sleep
        self._gate = threading.BoundedSemaphore(self.max_in_flight)
        self._accepted: dict[str, GenerationResult] = {}
        self._accepted_lock = threading.Lock()
        self._client = httpx.Client(timeout=self.timeout_s, transport=self.transport)

    @classmethod
    def from_env(cls, endpoint: str | None = None, **kwargs) -> "RemoteBackend":
        return cls(
            endpoint=endpoint or os.environ.get(ENDPOINT_ENV, ""),
            api_key=os.environ.get(API_KEY_ENV, ""),
            **kwargs,
        )

    @property
    def url(self) -> str:
        base = self.endpoint.rstrip("/")
        if not base.endswith("/v1"):
            base += "/v1"
        return base + "/chat/completions"

    def close(self) -> None:
        self._client.close()

    def _post(self, request: GenerationRequest) -> dict:
        body = {
            "model": request.model_id,
            "messages": [{"role": r, "content": c} for r, c in request.messages],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        headers = {"Authorization": f"Bearer {self.api_key}"}
        last_error = "no attempt made"
        for attempt in range(self.attempts):
            try:
                resp = self._client.post(self.url, json=body, headers=headers)
            except (httpx.TimeoutException, httpx.TransportError) as exc:
                last_error = f"{type(exc).__name__}: {exc}"
            else:
                if resp.status_code == 200:
                    return resp.json()
                if not _retryable(resp.status_code):
                    raise EndpointError(f"HTTP {resp.status_code}: {resp.text[:200]}")
                last_error = f"HTTP {resp.status_code}"
            if attempt + 1 < self.attempts:
                delay = self.rng.uniform(0, self.base_delay_s * self.factor**attempt)
                log.info("attempt %d failed (%s); retrying in %.2fs", attempt + 1, last_error, delay)
                self.sleep(delay)
        raise EndpointError(f"giving up after {self.attempts} attempts: {last_error}")

    def generate(self, request: GenerationRequest) -> GenerationResult:
        if request.request_id:
            with self._accepted_lock:
                done = self._accepted.get(request.request_id)
            if done is not None:
                return done
        with self._gate:
            start = time.monotonic()
            data = self._post(request)
            latency = int((time.monotonic() - start) * 1000)
        try:
            text = data["choices"][0]["message"].get("content") or ""
        except (KeyError, IndexError, TypeError) as exc:
            raise EndpointError(f"malformed completion payload: {exc}") from exc
        usage = data.get("usage") or {}
        completion = usage.get("completion_tokens")
        result = GenerationResult(
            text=text,
            prompt_tokens=usage.get("prompt_tokens"),
            completion_tokens=completion if completion is not None else whitespace_tokens(text),
            latency_ms=latency,
            backend=self.kind,
            approximate_tokens=completion is None,
        )
        if request.request_id:
            with self._accepted_lock:
                # first accepted completion wins
                result = self._accepted.setdefault(request.request_id, result)
        return result
