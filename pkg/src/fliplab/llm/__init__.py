"""Provider abstraction: remote OpenAI-compatible endpoints and local mocks."""

from .config import (
    CompletionRecord,
    ProviderConfig,
    RateLimit,
    RetryPolicy,
    TokenLogprob,
    request_digest,
)
from .prompts import (
    GENERATION_SYSTEM,
    GENERATION_USER_TEMPLATE,
    JUDGMENT_QUESTION,
    chat_wrap,
    generation_messages,
    generation_prompt_text,
    judgment_messages,
    judgment_prompt_text,
    percent,
    trailing_flips,
)
from .providers import (
    BayesProvider,
    ConstantJudgeProvider,
    MissingTokenError,
    MockFlipProvider,
    Provider,
    ProviderError,
    ProtocolError,
    binary_next_prob,
    sample_next_prob,
)
from .remote import RemoteProvider, build_provider

__all__ = [
    "CompletionRecord",
    "ProviderConfig",
    "RateLimit",
    "RetryPolicy",
    "TokenLogprob",
    "request_digest",
    "GENERATION_SYSTEM",
    "GENERATION_USER_TEMPLATE",
    "JUDGMENT_QUESTION",
    "chat_wrap",
    "generation_messages",
    "generation_prompt_text",
    "judgment_messages",
    "judgment_prompt_text",
    "percent",
    "trailing_flips",
    "Provider",
    "MockFlipProvider",
    "BayesProvider",
    "ConstantJudgeProvider",
    "ProviderError",
    "ProtocolError",
    "MissingTokenError",
    "binary_next_prob",
    "sample_next_prob",
    "RemoteProvider",
    "build_provider",
]
