"""Next-token providers: the abstract contract plus local mock implementations.

A provider answers two questions: sample whole completions for a prompt, and
give natural-log probabilities over candidate next tokens.  Mocks answer from
generator models or from a Bayesian hypothesis space, which makes every
remote protocol locally testable and gives the analysis code analytic
ground-truth providers.
"""

from __future__ import annotations

import dataclasses
import math
import re
import time
from abc import ABC, abstractmethod
from typing import Optional

from ..bayes import HypothesisSpace, posterior, predictive_next
from ..models import Model, SeededRng, sample_continuation
from ..sequences import DEFAULT_FORMAT, BinarySequence, TokenFormat, render
from .config import CompletionRecord, request_digest
from .prompts import JUDGMENT_QUESTION, prompt_text, trailing_flips

__all__ = [
    "Provider",
    "MockFlipProvider",
    "BayesProvider",
    "ConstantJudgeProvider",
    "ProviderError",
    "ProtocolError",
    "MissingTokenError",
    "binary_next_prob",
    "sample_next_prob",
]


class ProviderError(RuntimeError):
    """Transport-level failure after exhausting retries."""

    def __init__(self, message: str, attempts: Optional[list] = None):
        super().__init__(message)
        self.attempts = attempts or []


class ProtocolError(ProviderError):
    """The endpoint answered, but not in the expected shape."""

    def __init__(self, message: str, raw: str = ""):
        super().__init__(message)
        self.raw = raw


class MissingTokenError(LookupError):
    """Neither requested token appeared among the returned alternatives."""

    def __init__(self, message: str, alternatives: Optional[dict] = None):
        super().__init__(message)
        self.alternatives = alternatives or {}


def _ln(p: float) -> float:
    return math.log(p) if p > 0.0 else float("-inf")


class Provider(ABC):
    """Completion source with optional next-token probability readout."""

    name: str = "provider"

    @abstractmethod
    def complete(self, prompt, n: int = 1, *, max_tokens: Optional[int] = None,
                 seed: Optional[int] = None) -> list:
        """Return n CompletionRecords for the prompt."""

    @abstractmethod
    def alternatives(self, prompt) -> dict:
        """Natural-log probabilities over next-token candidates; {} if unknown."""


def binary_next_prob(provider: Provider, prompt, token_a: str, token_b: str) -> float:
    """Probability of token_b under pairwise renormalization against token_a.

    Alternatives are matched case-sensitively after stripping surrounding
    whitespace, so tokenizer variants like " Tails" count as "Tails"; mass on
    all other tokens is discarded.  Raises MissingTokenError when neither
    token appears, so callers can fall back to sampling-frequency estimation.
    """
    alts = provider.alternatives(prompt)
    normalized: dict = {}
    for token, logprob in alts.items():
        key = token.strip()
        normalized[key] = normalized.get(key, 0.0) + math.exp(logprob)
    mass_a = normalized.get(token_a, None)
    mass_b = normalized.get(token_b, None)
    if mass_a is None and mass_b is None:
        raise MissingTokenError(
            f"neither {token_a!r} nor {token_b!r} in alternatives", alternatives=alts
        )
    total = (mass_a or 0.0) + (mass_b or 0.0)
    if total <= 0.0:
        raise MissingTokenError(
            f"{token_a!r}/{token_b!r} carry zero probability mass", alternatives=alts
        )
    return (mass_b or 0.0) / total


def _first_word(text: str) -> str:
    stripped = text.strip().strip("[](){}\"'`.,;:!?")
    return stripped.split()[0].strip("[](){}\"'`.,;:!?") if stripped.split() else ""


def sample_next_prob(
    provider: Provider,
    prompt,
    token_a: str,
    token_b: str,
    n: int,
    seed: Optional[int] = None,
) -> float:
    """Estimate P(token_b) as its frequency among n sampled one-word answers."""
    records = provider.complete(prompt, n, max_tokens=4, seed=seed)
    count_a = count_b = 0
    for record in records:
        word = _first_word(record.response_text)
        if word == token_a:
            count_a += 1
        elif word == token_b:
            count_b += 1
    if count_a + count_b == 0:
        raise MissingTokenError(
            f"no sampled response started with {token_a!r} or {token_b!r}"
        )
    return count_b / (count_a + count_b)


_DECLARED_P = re.compile(
    r"(\d+(?:\.\d+)?)\s*%\s*probability of (Heads|Tails)", re.IGNORECASE
)


class MockFlipProvider(Provider):
    """Local provider backed by a generator model.

    Completions continue the flips parsed from the end of the prompt; token
    probabilities expose the model's next-flip distribution.  When the prompt
    declares a coin weight ("... 70% probability of Tails") and the model has
    a target probability, the mock honors the declaration, so one provider
    serves a whole P(Tails) grid.  Sampling is deterministic given the
    per-call seed (or, failing that, the provider seed plus a call counter).
    """

    def __init__(
        self,
        model: Model,
        fmt: TokenFormat = DEFAULT_FORMAT,
        seed: int = 0,
        max_flips: int = 60,
        follow_prompt_p: bool = True,
    ):
        self.model = model
        self.fmt = fmt
        self.seed = seed
        self.max_flips = max_flips
        self.follow_prompt_p = follow_prompt_p
        self.name = f"mock:{model.label()}"
        self._calls = 0

    def _model_for(self, prompt) -> Model:
        if not self.follow_prompt_p or not hasattr(self.model, "p"):
            return self.model
        declared = None
        for value, side in _DECLARED_P.findall(prompt_text(prompt)):
            p = float(value) / 100.0
            declared = p if side.lower() == "tails" else 1.0 - p
            if side.lower() == "tails":
                break
        if declared is None:
            return self.model
        return dataclasses.replace(self.model, p=min(1.0, max(0.0, declared)))

    def _flip_budget(self, max_tokens: Optional[int]) -> int:
        if max_tokens is None:
            return self.max_flips
        # A rendered flip runs about three tokens ("Heads", ",", space).
        return max(1, max_tokens // 3)

    def complete(self, prompt, n: int = 1, *, max_tokens: Optional[int] = None,
                 seed: Optional[int] = None) -> list:
        model = self._model_for(prompt)
        context = trailing_flips(prompt, self.fmt)
        if seed is None:
            self._calls += 1
            seed = SeededRng.derive(self.seed, "call", self._calls)
        budget = self._flip_budget(max_tokens)
        digest = request_digest(
            {"provider": self.name, "prompt": prompt_text(prompt), "n": n,
             "max_tokens": budget, "seed": seed}
        )
        records = []
        for i in range(n):
            rng = SeededRng(SeededRng.derive(seed, "sample", i))
            flips = sample_continuation(model, context, budget, rng)
            records.append(
                CompletionRecord(
                    request_hash=digest,
                    prompt=prompt,
                    response_text=render(flips, self.fmt),
                    token_logprobs=None,
                    created=time.time(),
                    provider=self.name,
                )
            )
        return records

    def alternatives(self, prompt) -> dict:
        context = trailing_flips(prompt, self.fmt)
        p = self._model_for(prompt).next_prob(context)
        return {self.fmt.heads_token: _ln(1.0 - p), self.fmt.tails_token: _ln(p)}


class BayesProvider(Provider):
    """Analytic provider backed by a hypothesis space.

    Generation prompts get the posterior-predictive next-flip distribution;
    judgment prompts get the posterior weight of the random hypothesis as the
    Random/Non readout.  This is the closed-form reference the harness tests
    run against.
    """

    def __init__(
        self,
        space: HypothesisSpace,
        fmt: TokenFormat = DEFAULT_FORMAT,
        mode: str = "marginalize",
        seed: int = 0,
    ):
        self.space = space
        self.fmt = fmt
        self.mode = mode
        self.seed = seed
        self.name = f"bayes:{len(space)}-hypotheses:{mode}"
        self._calls = 0

    def _is_judgment(self, prompt) -> bool:
        return JUDGMENT_QUESTION in prompt_text(prompt)

    def _p_random(self, prompt) -> float:
        context = trailing_flips(prompt, self.fmt)
        return posterior(self.space, context).weight(self.space.random_index)

    def alternatives(self, prompt) -> dict:
        context = trailing_flips(prompt, self.fmt)
        if self._is_judgment(prompt):
            p_random = self._p_random(prompt)
            return {"Random": _ln(p_random), "Non": _ln(1.0 - p_random)}
        p = predictive_next(self.space, context, self.mode)
        return {self.fmt.heads_token: _ln(1.0 - p), self.fmt.tails_token: _ln(p)}

    def complete(self, prompt, n: int = 1, *, max_tokens: Optional[int] = None,
                 seed: Optional[int] = None) -> list:
        if seed is None:
            self._calls += 1
            seed = SeededRng.derive(self.seed, "call", self._calls)
        digest = request_digest(
            {"provider": self.name, "prompt": prompt_text(prompt), "n": n, "seed": seed}
        )
        records = []
        judgment = self._is_judgment(prompt)
        context = trailing_flips(prompt, self.fmt)
        budget = max(1, (max_tokens or 180) // 3)
        for i in range(n):
            rng = SeededRng(SeededRng.derive(seed, "sample", i))
            if judgment:
                text = "Random" if rng.random() < self._p_random(prompt) else "Non"
            else:
                flips = list(context)
                out = []
                for _ in range(budget):
                    p = predictive_next(self.space, BinarySequence(flips), self.mode)
                    flip = 1 if rng.random() < p else 0
                    flips.append(flip)
                    out.append(flip)
                text = render(BinarySequence(out), self.fmt)
            records.append(
                CompletionRecord(
                    request_hash=digest,
                    prompt=prompt,
                    response_text=text,
                    token_logprobs=None,
                    created=time.time(),
                    provider=self.name,
                )
            )
        return records


class ConstantJudgeProvider(Provider):
    """Judge that answers Random with a fixed probability, for protocol tests."""

    def __init__(self, p_random: float, seed: int = 0):
        if not 0.0 <= p_random <= 1.0:
            raise ValueError("p_random must be in [0, 1]")
        self.p_random = p_random
        self.seed = seed
        self.name = f"constant:p_random={p_random:g}"
        self._calls = 0

    def alternatives(self, prompt) -> dict:
        return {"Random": _ln(self.p_random), "Non": _ln(1.0 - self.p_random)}

    def complete(self, prompt, n: int = 1, *, max_tokens: Optional[int] = None,
                 seed: Optional[int] = None) -> list:
        if seed is None:
            self._calls += 1
            seed = SeededRng.derive(self.seed, "call", self._calls)
        digest = request_digest(
            {"provider": self.name, "prompt": prompt_text(prompt), "n": n, "seed": seed}
        )
        rng = SeededRng(seed)
        return [
            CompletionRecord(
                request_hash=digest,
                prompt=prompt,
                response_text="Random" if rng.random() < self.p_random else "Non",
                token_logprobs=None,
                created=time.time(),
                provider=self.name,
            )
            for _ in range(n)
        ]
