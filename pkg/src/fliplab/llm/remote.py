"""HTTP client for OpenAI-compatible completion endpoints.

Every response body is appended verbatim to an audit log before any parsing,
and cached content-addressed by the full request, so reruns replay from disk
with zero network calls and experiments stay re-analyzable offline.
"""

from __future__ import annotations

import json
import os
import threading
import time
from pathlib import Path
from typing import Optional

import httpx

from .config import (
    CompletionRecord,
    ProviderConfig,
    RetryPolicy,
    TokenLogprob,
    request_digest,
)
from .providers import MockFlipProvider, Provider, ProviderError, ProtocolError

__all__ = ["RemoteProvider", "build_provider"]

RETRYABLE_STATUSES = frozenset({429, 500, 502, 503, 504})


class RemoteProvider(Provider):
    """OpenAI-compatible /v1/completions and /v1/chat/completions client."""

    def __init__(
        self,
        config: ProviderConfig,
        cache_dir: Optional[Path] = None,
        *,
        retry: RetryPolicy = RetryPolicy(),
        sleep=time.sleep,
        transport: Optional[httpx.BaseTransport] = None,
        timeout: float = 60.0,
    ):
        if not config.is_remote:
            raise ValueError("RemoteProvider requires a remote provider config")
        self.config = config
        self.retry = retry
        self.name = f"{config.kind}:{config.model_id}"
        self.cache_dir = Path(cache_dir) if cache_dir else None
        if self.cache_dir:
            self.cache_dir.mkdir(parents=True, exist_ok=True)
        self.network_calls = 0
        self.cache_hits = 0
        self._sleep = sleep
        self._client = httpx.Client(timeout=timeout, transport=transport)
        self._gate = threading.BoundedSemaphore(config.rate_limit.max_in_flight)
        self._pace_lock = threading.Lock()
        self._next_slot = 0.0
        self._store_lock = threading.Lock()
        self._counter_lock = threading.Lock()

    # ---- plumbing ----------------------------------------------------------

    def close(self) -> None:
        self._client.close()

    def _headers(self) -> dict:
        key = os.environ.get(self.config.api_key_env, "")
        if not key:
            raise ProviderError(
                f"environment variable {self.config.api_key_env} is not set"
            )
        return {"Authorization": f"Bearer {key}"}

    def _pace(self) -> None:
        rpm = self.config.rate_limit.requests_per_minute
        if rpm <= 0:
            return
        interval = 60.0 / rpm
        with self._pace_lock:
            now = time.monotonic()
            wait = self._next_slot - now
            self._next_slot = max(now, self._next_slot) + interval
        if wait > 0:
            self._sleep(wait)

    def _audit(self, entry: dict) -> None:
        if not self.cache_dir:
            return
        line = json.dumps(entry, sort_keys=True)
        with self._store_lock:
            with open(self.cache_dir / "records.jsonl", "a", encoding="utf-8") as fh:
                fh.write(line + "\n")

    def _request(self, path: str, payload: dict) -> tuple:
        """POST with cache, retry, and throttling; returns (key, body, cached)."""
        key = request_digest(
            {"endpoint": self.config.endpoint_url, "path": path, "payload": payload}
        )
        cache_file = self.cache_dir / f"{key}.json" if self.cache_dir else None
        if cache_file and cache_file.exists():
            self.cache_hits += 1
            return key, json.loads(cache_file.read_text(encoding="utf-8"))["body"], True

        url = self.config.endpoint_url.rstrip("/") + path
        headers = self._headers()
        attempts = []
        body = None
        with self._gate:
            for attempt in range(self.retry.attempts):
                self._pace()
                try:
                    with self._counter_lock:
                        self.network_calls += 1
                    response = self._client.post(url, json=payload, headers=headers)
                except httpx.TransportError as exc:
                    attempts.append({"attempt": attempt, "error": str(exc)})
                    if attempt + 1 < self.retry.attempts:
                        self._sleep(self.retry.delay(attempt))
                    continue
                if response.status_code == 200:
                    body = response.text
                    break
                attempts.append(
                    {"attempt": attempt, "status": response.status_code}
                )
                if response.status_code in RETRYABLE_STATUSES:
                    if attempt + 1 < self.retry.attempts:
                        self._sleep(self.retry.delay(attempt))
                    continue
                raise ProviderError(
                    f"{url} returned {response.status_code}: {response.text[:200]}",
                    attempts=attempts,
                )
        if body is None:
            raise ProviderError(
                f"{url} failed after {self.retry.attempts} attempts", attempts=attempts
            )
        # Persist the raw response before any parsing.
        self._audit(
            {"request_hash": key, "path": path, "payload": payload,
             "body": body, "received": time.time()}
        )
        if cache_file:
            tmp = cache_file.with_suffix(".tmp")
            tmp.write_text(
                json.dumps({"request_hash": key, "request": payload, "body": body}),
                encoding="utf-8",
            )
            os.replace(tmp, cache_file)
        return key, body, False

    # ---- request building and parsing --------------------------------------

    def _payload(self, prompt, n: int, max_tokens: Optional[int]) -> tuple:
        tokens = max_tokens if max_tokens is not None else self.config.max_tokens
        if self.config.kind == "remote_completions":
            if not isinstance(prompt, str):
                raise ValueError("completions endpoints take a text prompt")
            return "/v1/completions", {
                "model": self.config.model_id,
                "prompt": prompt,
                "max_tokens": tokens,
                "temperature": self.config.temperature,
                "logprobs": self.config.top_logprobs,
                "n": n,
            }
        messages = (
            [{"role": "user", "content": prompt}] if isinstance(prompt, str) else prompt
        )
        return "/v1/chat/completions", {
            "model": self.config.model_id,
            "messages": messages,
            "max_tokens": tokens,
            "temperature": self.config.temperature,
            "logprobs": True,
            "top_logprobs": self.config.top_logprobs,
            "n": n,
        }

    def _parse_choice(self, choice: dict) -> tuple:
        if self.config.kind == "remote_completions":
            text = choice.get("text", "")
            lp = choice.get("logprobs") or {}
            tokens = lp.get("tokens") or []
            logprobs = lp.get("token_logprobs") or []
            tops = lp.get("top_logprobs") or []
            entries = tuple(
                TokenLogprob(
                    token=tokens[i],
                    logprob=float(logprobs[i]),
                    top=dict(tops[i] or {}) if i < len(tops) else {},
                )
                for i in range(len(tokens))
            )
            return text, entries or None
        message = choice.get("message") or {}
        text = message.get("content", "")
        lp = choice.get("logprobs") or {}
        entries = tuple(
            TokenLogprob(
                token=item.get("token", ""),
                logprob=float(item.get("logprob", 0.0)),
                top={
                    alt.get("token", ""): float(alt.get("logprob", 0.0))
                    for alt in item.get("top_logprobs") or []
                },
            )
            for item in lp.get("content") or []
        )
        return text, entries or None

    def complete(self, prompt, n: int = 1, *, max_tokens: Optional[int] = None,
                 seed: Optional[int] = None) -> list:
        # `seed` is accepted for interface parity; sampling randomness lives
        # server-side for remote providers.
        path, payload = self._payload(prompt, n, max_tokens)
        key, body, _ = self._request(path, payload)
        try:
            parsed = json.loads(body)
            choices = parsed["choices"]
            records = []
            for choice in choices:
                text, entries = self._parse_choice(choice)
                records.append(
                    CompletionRecord(
                        request_hash=key,
                        prompt=prompt,
                        response_text=text,
                        token_logprobs=entries,
                        created=float(parsed.get("created", 0)),
                        provider=self.name,
                    )
                )
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise ProtocolError(f"malformed response body: {exc}", raw=body) from exc
        if len(records) != n:
            raise ProtocolError(
                f"requested {n} choices, got {len(records)}", raw=body
            )
        return records

    def alternatives(self, prompt) -> dict:
        records = self.complete(prompt, n=1, max_tokens=1)
        entries = records[0].token_logprobs
        if not entries:
            return {}
        first = entries[0]
        alts = dict(first.top)
        alts.setdefault(first.token, first.logprob)
        return alts


def build_provider(config: ProviderConfig, cache_dir: Optional[Path] = None,
                   seed: int = 0) -> Provider:
    """Construct the provider a config describes."""
    if config.kind == "mock":
        if config.mock_model is None:
            raise ValueError("mock provider config needs mock_model")
        return MockFlipProvider(config.mock_model, seed=seed)
    return RemoteProvider(config, cache_dir=cache_dir)
