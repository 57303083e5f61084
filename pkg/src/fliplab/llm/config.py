"""Provider configuration and the persisted completion record."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Optional

from ..models import Model, model_from_dict

__all__ = [
    "RateLimit",
    "RetryPolicy",
    "ProviderConfig",
    "TokenLogprob",
    "CompletionRecord",
    "request_digest",
]

PROVIDER_KINDS = ("remote_completions", "remote_chat", "mock")


@dataclass(frozen=True)
class RateLimit:
    """Client-side throttling: concurrent requests and request rate."""

    max_in_flight: int = 4
    requests_per_minute: float = 0.0  # 0 disables pacing

    def __post_init__(self):
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")
        if self.requests_per_minute < 0:
            raise ValueError("requests_per_minute must be >= 0")


@dataclass(frozen=True)
class RetryPolicy:
    """Exponential backoff on transport errors, 429s, and 5xx responses."""

    attempts: int = 5
    base_delay: float = 0.25
    max_delay: float = 8.0

    def delay(self, attempt: int) -> float:
        return min(self.max_delay, self.base_delay * (2.0**attempt))


@dataclass(frozen=True)
class ProviderConfig:
    """Where completions come from and how they are sampled."""

    kind: str
    endpoint_url: str = ""
    model_id: str = ""
    api_key_env: str = "OPENAI_API_KEY"
    temperature: float = 1.0
    max_tokens: int = 180
    top_logprobs: int = 5
    rate_limit: RateLimit = field(default_factory=RateLimit)
    mock_model: Optional[Model] = None

    def __post_init__(self):
        if self.kind not in PROVIDER_KINDS:
            raise ValueError(f"kind must be one of {PROVIDER_KINDS}, got {self.kind!r}")
        if self.kind.startswith("remote") and not (self.endpoint_url and self.model_id):
            raise ValueError("remote providers require endpoint_url and model_id")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")

    @property
    def is_remote(self) -> bool:
        return self.kind.startswith("remote")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "endpoint_url": self.endpoint_url,
            "model_id": self.model_id,
            "api_key_env": self.api_key_env,
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
            "top_logprobs": self.top_logprobs,
            "rate_limit": {
                "max_in_flight": self.rate_limit.max_in_flight,
                "requests_per_minute": self.rate_limit.requests_per_minute,
            },
            "mock_model": self.mock_model.to_dict() if self.mock_model else None,
        }

    @classmethod
    def from_dict(cls, record: dict) -> "ProviderConfig":
        rate = record.get("rate_limit") or {}
        mock = record.get("mock_model")
        return cls(
            kind=record["kind"],
            endpoint_url=record.get("endpoint_url", ""),
            model_id=record.get("model_id", ""),
            api_key_env=record.get("api_key_env", "OPENAI_API_KEY"),
            temperature=float(record.get("temperature", 1.0)),
            max_tokens=int(record.get("max_tokens", 180)),
            top_logprobs=int(record.get("top_logprobs", 5)),
            rate_limit=RateLimit(
                max_in_flight=int(rate.get("max_in_flight", 4)),
                requests_per_minute=float(rate.get("requests_per_minute", 0.0)),
            ),
            mock_model=model_from_dict(mock) if mock else None,
        )


@dataclass(frozen=True)
class TokenLogprob:
    """One generated token with its log-probability and top alternatives."""

    token: str
    logprob: float
    top: dict  # alternative token -> natural-log probability


@dataclass(frozen=True)
class CompletionRecord:
    """One completion, hash-addressed by everything that affected the request."""

    request_hash: str
    prompt: object  # str, or chat message list
    response_text: str
    token_logprobs: Optional[tuple]
    created: float
    provider: str


def request_digest(payload: dict) -> str:
    """Content hash over all request-affecting fields (canonical JSON)."""
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
