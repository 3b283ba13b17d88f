"""Chat-model dispatch: provider adapters, reply cache, bounded-concurrency batches.

Adapters implement one minimal contract: full prompt text in, reply text
out, with fixed decoding parameters. The cache keys on model id, prompt
digest, and decoding-parameter digest, so a warm cache makes reruns
deterministic and free of network calls.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Protocol, Sequence

from .errors import PipelineError
from .prompts import JudgmentParseError, ModelJudgment, Task, parse_judgment


class GatewayError(PipelineError):
    pass


class TransportError(GatewayError):
    pass


class ChatClient(Protocol):
    model_id: str
    decoding_params: dict

    def complete(self, prompt: str) -> str: ...


def prompt_digest(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


def params_digest(params: dict) -> str:
    canonical = json.dumps(params, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class CacheKey:
    model_id: str
    prompt_digest: str
    params_digest: str

    @classmethod
    def for_prompt(cls, client: ChatClient, prompt: str) -> "CacheKey":
        return cls(client.model_id, prompt_digest(prompt), params_digest(client.decoding_params))

    def as_string(self) -> str:
        return f"{self.model_id}:{self.prompt_digest}:{self.params_digest}"


class ReplyCache:
    """Append-only JSONL reply cache, safe for concurrent lookups/inserts.

    Identical keys are last-write-wins, both in the file replay and in memory.
    """

    def __init__(self, path=None):
        self.path = Path(path) if path is not None else None
        self._lock = threading.Lock()
        self._entries: dict[str, str] = {}
        if self.path is not None and self.path.exists():
            with open(self.path, encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    rec = json.loads(line)
                    self._entries[rec["key"]] = rec["reply"]

    def get(self, key: CacheKey) -> Optional[str]:
        with self._lock:
            return self._entries.get(key.as_string())

    def put(self, key: CacheKey, reply: str) -> None:
        rec = {
            "key": key.as_string(),
            "model_id": key.model_id,
            "prompt_digest": key.prompt_digest,
            "reply": reply,
            "timestamp": time.time(),
        }
        with self._lock:
            self._entries[key.as_string()] = reply
            if self.path is not None:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(rec, ensure_ascii=False) + "\n")

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)


DEFAULT_DECODING = {"temperature": 0, "max_tokens": 256}


@dataclass
class FixtureClient:
    """Replays canned replies from a directory of {prompt_digest}.txt files."""

    directory: Path
    model_id: str = "fixture"
    decoding_params: dict = field(default_factory=lambda: dict(DEFAULT_DECODING))

    def __post_init__(self):
        self.directory = Path(self.directory)

    def complete(self, prompt: str) -> str:
        path = self.directory / f"{prompt_digest(prompt)}.txt"
        if not path.exists():
            raise TransportError(f"{self.model_id}: no canned reply {path.name} in {self.directory}")
        return path.read_text(encoding="utf-8")


@dataclass
class HttpChatClient:
    """Minimal OpenAI-style chat-completions adapter.

    Credentials come from the environment variable named in the endpoint
    config, never from the config file itself.
    """

    base_url: str
    model_id: str
    api_key_env: str
    decoding_params: dict = field(default_factory=lambda: dict(DEFAULT_DECODING))
    system_prompt: Optional[str] = None
    timeout: float = 60.0

    def complete(self, prompt: str) -> str:
        import requests

        api_key = os.environ.get(self.api_key_env, "")
        if not api_key:
            raise TransportError(f"missing credential env var {self.api_key_env}")
        messages = []
        if self.system_prompt:
            messages.append({"role": "system", "content": self.system_prompt})
        messages.append({"role": "user", "content": prompt})
        body = {"model": self.model_id, "messages": messages, **self.decoding_params}
        try:
            resp = requests.post(
                self.base_url.rstrip("/") + "/chat/completions",
                json=body,
                headers={"Authorization": f"Bearer {api_key}"},
                timeout=self.timeout,
            )
            resp.raise_for_status()
            payload = resp.json()
            return payload["choices"][0]["message"]["content"]
        except (requests.RequestException, KeyError, IndexError, ValueError) as exc:
            raise TransportError(f"{self.model_id}: {exc}") from exc


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 3
    backoff_seconds: float = 1.0
    backoff_multiplier: float = 2.0

    def sleep_before(self, attempt: int) -> float:
        return self.backoff_seconds * self.backoff_multiplier ** (attempt - 1)


def dispatch(
    client: ChatClient,
    prompt: str,
    cache: Optional[ReplyCache] = None,
    retry: RetryPolicy = RetryPolicy(),
) -> str:
    """One prompt through cache, transport, and retries; returns the raw reply."""
    key = CacheKey.for_prompt(client, prompt) if cache is not None else None
    if cache is not None:
        hit = cache.get(key)
        if hit is not None:
            return hit
    last_error = None
    for attempt in range(1, retry.max_attempts + 1):
        try:
            reply = client.complete(prompt)
            break
        except TransportError as exc:
            last_error = exc
            if attempt < retry.max_attempts:
                time.sleep(retry.sleep_before(attempt))
    else:
        raise TransportError(
            f"{client.model_id}: failed after {retry.max_attempts} attempts: {last_error}"
        )
    if cache is not None:
        cache.put(key, reply)
    return reply


@dataclass(frozen=True)
class BatchItem:
    """Per-prompt outcome; exactly one of judgment/error is set."""

    prompt: str
    judgment: Optional[ModelJudgment] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.judgment is not None


def classify_batch(
    client: ChatClient,
    prompts: Sequence[str],
    task: Task,
    cache: Optional[ReplyCache] = None,
    max_in_flight: int = 4,
    retry: RetryPolicy = RetryPolicy(),
) -> list[BatchItem]:
    """Dispatch prompts with bounded concurrency; results keep input order.

    Failures (transport after retries, or unparseable replies) are recorded
    per item instead of aborting the batch.
    """
    if max_in_flight < 1:
        raise GatewayError(f"max_in_flight must be >= 1, got {max_in_flight}")

    def one(prompt: str) -> BatchItem:
        try:
            reply = dispatch(client, prompt, cache, retry)
        except TransportError as exc:
            return BatchItem(prompt=prompt, error=f"transport: {exc}")
        try:
            judgment = parse_judgment(reply, task, model_id=client.model_id)
        except JudgmentParseError as exc:
            return BatchItem(prompt=prompt, error=f"parse: {exc}")
        return BatchItem(prompt=prompt, judgment=judgment)

    if not prompts:
        return []
    if max_in_flight == 1 or len(prompts) == 1:
        return [one(p) for p in prompts]
    with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
        return list(pool.map(one, prompts))
