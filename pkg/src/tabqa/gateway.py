"""Access to chat LMs and text encoders.

Provides deterministic offline mocks (a hashing encoder and a scripted chat
model) plus remote HTTP clients with retries, bounded concurrency, and token
accounting. All embedding vectors are L2-normalized.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
import requests

from .errors import DimMismatchError, EmptyInputError, RemoteError, ScriptExhaustedError

logger = logging.getLogger(__name__)

Transport = Callable[[str, dict, dict, float], tuple[int, object]]

_WORD_RE = re.compile(r"[a-z0-9]+")


def count_tokens(text: str) -> int:
    """Token count heuristic: ceil(len(text) / 4)."""
    return (len(text) + 3) // 4


@dataclass(frozen=True)
class LmEndpointConfig:
    """Connection settings for one remote endpoint."""

    base_url: str
    model_name: str
    api_key_env_var: str = ""
    max_concurrent_requests: int = 4
    timeout_ms: int = 30_000
    retry_count: int = 3
    backoff_base_s: float = 0.5

    def __post_init__(self) -> None:
        if self.max_concurrent_requests < 1:
            raise ValueError("max_concurrent_requests must be >= 1")


def _default_transport(url: str, payload: dict, headers: dict, timeout_s: float):
    response = requests.post(url, json=payload, headers=headers, timeout=timeout_s)
    try:
        body = response.json()
    except ValueError:
        body = None
    return response.status_code, body


class _RemoteBase:
    """Shared retry/backoff/concurrency plumbing for remote clients."""

    def __init__(self, config: LmEndpointConfig, transport: Transport | None = None):
        self.config = config
        self._transport = transport or _default_transport
        self._semaphore = threading.BoundedSemaphore(config.max_concurrent_requests)

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.config.api_key_env_var, "") if self.config.api_key_env_var else ""
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def _post(self, path: str, payload: dict) -> object:
        url = self.config.base_url.rstrip("/") + path
        timeout_s = self.config.timeout_ms / 1000.0
        last_error = "no attempt made"
        for attempt in range(self.config.retry_count + 1):
            if attempt:
                time.sleep(self.config.backoff_base_s * (2 ** (attempt - 1)))
            try:
                with self._semaphore:
                    status, body = self._transport(url, payload, self._headers(), timeout_s)
            except Exception as exc:
                last_error = f"transport error: {exc}"
                logger.warning("request to %s failed (attempt %d): %s", url, attempt + 1, exc)
                continue
            if 200 <= status < 300 and body is not None:
                return body
            last_error = f"HTTP {status}"
            logger.warning("request to %s returned %s (attempt %d)", url, status, attempt + 1)
        raise RemoteError(f"{url}: {last_error} after {self.config.retry_count + 1} attempts")


def _truncate_at_stops(text: str, stop_sequences: list[str] | None) -> str:
    if not stop_sequences:
        return text
    cut = len(text)
    for stop in stop_sequences:
        idx = text.find(stop)
        if idx != -1:
            cut = min(cut, idx)
    return text[:cut]


class HashingEncoder:
    """Deterministic offline encoder.

    Each text maps to a fixed-dim vector by hashing its character trigrams
    and word tokens into signed buckets (keyed blake2b, so results are stable
    across processes), then L2-normalizing. Identical text always yields the
    identical vector and every vector has unit norm.
    """

    def __init__(self, dim: int = 256, seed: int = 0):
        if dim < 2:
            raise ValueError("dim must be >= 2")
        self.dim = dim
        self._key = seed.to_bytes(8, "little", signed=True)
        self.tokens_used = 0
        self.calls = 0
        self._lock = threading.Lock()

    def _bucket(self, gram: str) -> tuple[int, float]:
        digest = hashlib.blake2b(gram.encode("utf-8"), key=self._key, digest_size=8).digest()
        value = int.from_bytes(digest, "little")
        sign = 1.0 if value & 1 else -1.0
        return (value >> 1) % self.dim, sign

    def _encode_one(self, text: str) -> np.ndarray:
        body = text.strip().lower()
        vec = np.zeros(self.dim, dtype=np.float64)
        padded = f"#{body}#"
        grams = [padded[i:i + 3] for i in range(len(padded) - 2)]
        grams.extend(_WORD_RE.findall(body))
        for gram in grams:
            bucket, sign = self._bucket(gram)
            vec[bucket] += sign
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            bucket, _ = self._bucket(body)
            vec[bucket] = 1.0
            norm = 1.0
        return vec / norm

    def embed_batch(self, texts: list[str]) -> np.ndarray:
        """Encode texts into an (n, dim) float32 matrix, order-preserving."""
        if not texts:
            raise EmptyInputError("embed_batch requires at least one text")
        if any(not t.strip() for t in texts):
            raise EmptyInputError("embed_batch texts must be non-empty after trim")
        with self._lock:
            self.tokens_used += sum(count_tokens(t) for t in texts)
            self.calls += 1
        return np.stack([self._encode_one(t) for t in texts])


class RemoteEncoder(_RemoteBase):
    """Encoder backed by an embeddings HTTP endpoint.

    Sends {"model", "input"} and reads data[i].embedding structurally.
    Returned vectors are L2-normalized and validated against the configured
    dimension.
    """

    def __init__(self, config: LmEndpointConfig, dim: int, transport: Transport | None = None):
        super().__init__(config, transport)
        self.dim = dim
        self.tokens_used = 0
        self.calls = 0
        self._lock = threading.Lock()

    def embed_batch(self, texts: list[str]) -> np.ndarray:
        if not texts:
            raise EmptyInputError("embed_batch requires at least one text")
        if any(not t.strip() for t in texts):
            raise EmptyInputError("embed_batch texts must be non-empty after trim")
        body = self._post("/embeddings", {"model": self.config.model_name, "input": list(texts)})
        try:
            items = body["data"]
            items = sorted(items, key=lambda it: it.get("index", 0))
            vectors = [item["embedding"] for item in items]
        except (TypeError, KeyError) as exc:
            raise RemoteError(f"malformed embeddings response: {exc}") from exc
        if len(vectors) != len(texts):
            raise RemoteError(f"expected {len(texts)} embeddings, got {len(vectors)}")
        matrix = np.asarray(vectors, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[1] != self.dim:
            raise DimMismatchError(f"endpoint returned dim {matrix.shape[-1]}, expected {self.dim}")
        norms = np.linalg.norm(matrix, axis=1, keepdims=True)
        if np.any(norms == 0.0):
            raise RemoteError("endpoint returned a zero vector")
        with self._lock:
            self.tokens_used += sum(count_tokens(t) for t in texts)
            self.calls += 1
        return matrix / norms


class ScriptedChatModel:
    """Offline chat model replaying a script.

    The script is a list of {"prompt_contains": str, "reply": str} entries;
    each call consumes the first unconsumed entry whose prompt_contains is a
    substring of the prompt. An entry with "repeat": true is never consumed,
    which lets one script serve repeated voting runs. No matching entry
    raises ScriptExhaustedError.
    """

    def __init__(self, entries: list[dict]):
        for entry in entries:
            if "reply" not in entry:
                raise ValueError("script entries need a 'reply' key")
        self._entries = [dict(entry) for entry in entries]
        self._consumed = [False] * len(entries)
        self._lock = threading.Lock()
        self.prompt_tokens_used = 0
        self.calls = 0

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedChatModel":
        entries = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(entries, list):
            raise ValueError("playback script must be a JSON list")
        return cls(entries)

    def chat_complete(self, prompt: str, temperature: float = 0.0,
                      max_output_tokens: int | None = None,
                      stop_sequences: list[str] | None = None) -> str:
        if not prompt:
            raise ValueError("prompt must be non-empty")
        with self._lock:
            self.prompt_tokens_used += count_tokens(prompt)
            self.calls += 1
            for idx, entry in enumerate(self._entries):
                if self._consumed[idx]:
                    continue
                if entry.get("prompt_contains", "") in prompt:
                    if not entry.get("repeat", False):
                        self._consumed[idx] = True
                    return _truncate_at_stops(entry["reply"], stop_sequences)
        raise ScriptExhaustedError("no scripted reply matches the prompt")


class RemoteChatModel(_RemoteBase):
    """Chat model backed by a chat-completions HTTP endpoint.

    Sends {"model", "messages", "temperature", "stop"} and reads
    choices[0].message.content structurally.
    """

    def __init__(self, config: LmEndpointConfig, transport: Transport | None = None):
        super().__init__(config, transport)
        self.prompt_tokens_used = 0
        self.calls = 0
        self._lock = threading.Lock()

    def chat_complete(self, prompt: str, temperature: float = 0.0,
                      max_output_tokens: int | None = None,
                      stop_sequences: list[str] | None = None) -> str:
        if not prompt:
            raise ValueError("prompt must be non-empty")
        payload: dict = {
            "model": self.config.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": temperature,
        }
        if stop_sequences:
            payload["stop"] = list(stop_sequences)
        if max_output_tokens is not None:
            payload["max_tokens"] = max_output_tokens
        body = self._post("/chat/completions", payload)
        try:
            reply = body["choices"][0]["message"]["content"]
        except (TypeError, KeyError, IndexError) as exc:
            raise RemoteError(f"malformed chat response: {exc}") from exc
        if not isinstance(reply, str):
            raise RemoteError("chat response content is not text")
        with self._lock:
            self.prompt_tokens_used += count_tokens(prompt)
            self.calls += 1
        return _truncate_at_stops(reply, stop_sequences)
