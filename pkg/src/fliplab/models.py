"""Generator hypotheses over binary sequences.

Four model families share one interface: a Bernoulli process, the
memory-constrained Window Average model (the Gambler's Fallacy generator),
order-k Markov chains, and deterministic cyclic repeaters for regular
languages of the form (pattern)^n.  Each exposes the probability of the next
flip given a context, sequence log-likelihood (base 2), autoregressive
sampling, and a description length in bits for simplicity priors.
"""

from __future__ import annotations

import hashlib
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .sequences import BinarySequence

__all__ = [
    "DescriptionLengthConfig",
    "DEFAULT_DL",
    "SeededRng",
    "Model",
    "Bernoulli",
    "WindowAverage",
    "MarkovChain",
    "RegularRepeater",
    "markov_fit",
    "sample_continuation",
    "model_from_dict",
    "model_from_string",
    "InsufficientDataError",
    "NEG_INF",
]

NEG_INF = float("-inf")


class InsufficientDataError(ValueError):
    """Raised when a fit has no usable transitions and no smoothing."""


@dataclass(frozen=True)
class DescriptionLengthConfig:
    """Bit costs for the simplicity prior; the encoding is configuration,
    only the repeater rule (pattern symbols + phase) is fixed."""

    bernoulli_bits: float = 2.0
    window_bits: float = 4.0
    prob_bits: float = 4.0  # per Markov table entry


DEFAULT_DL = DescriptionLengthConfig()


class SeededRng:
    """Reproducible random stream: same seed, same algorithm, same draws."""

    algorithm = "pcg64"

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._gen = np.random.default_rng(self.seed)

    def random(self) -> float:
        return float(self._gen.random())

    @staticmethod
    def derive(seed: int, *keys) -> int:
        """Stable 63-bit seed derived from a base seed and mixing keys."""
        digest = hashlib.sha256(repr((int(seed),) + tuple(keys)).encode()).digest()
        return int.from_bytes(digest[:8], "big") >> 1

    def __repr__(self) -> str:
        return f"SeededRng(seed={self.seed})"


def _check_prob(p: float, name: str = "p") -> None:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"{name} must be in [0, 1], got {p}")


class Model(ABC):
    """Common interface for next-flip generators."""

    variant: str

    @abstractmethod
    def next_prob(self, context: BinarySequence) -> float:
        """Probability that the next flip is Tails (1), given the context."""

    def log_likelihood(self, seq: BinarySequence) -> float:
        """Base-2 log-probability of the whole sequence via the chain rule."""
        total = 0.0
        flips = tuple(seq)
        for t, flip in enumerate(flips):
            p = self.next_prob(BinarySequence(flips[:t]))
            prob = p if flip == 1 else 1.0 - p
            if prob <= 0.0:
                return NEG_INF
            total += math.log2(prob)
        return total

    def sample(self, length: int, rng: SeededRng) -> BinarySequence:
        """Autoregressive draw of `length` flips; deterministic given the seed."""
        return sample_continuation(self, BinarySequence(), length, rng)

    @abstractmethod
    def description_length(self, config: DescriptionLengthConfig = DEFAULT_DL) -> float:
        """Description length of the hypothesis, in bits."""

    @abstractmethod
    def to_dict(self) -> dict:
        """Key-value record with the fixed field names used in configs."""

    @abstractmethod
    def label(self) -> str:
        """Short human-readable name for reports."""


def sample_continuation(
    model: Model, context: BinarySequence, length: int, rng: SeededRng
) -> BinarySequence:
    """Sample `length` flips continuing `context`; returns only the new flips."""
    if length < 0:
        raise ValueError("length must be >= 0")
    flips = list(context)
    start = len(flips)
    for _ in range(length):
        p = model.next_prob(BinarySequence(flips))
        flips.append(1 if rng.random() < p else 0)
    return BinarySequence(flips[start:])


@dataclass(frozen=True)
class Bernoulli(Model):
    """Independent flips with fixed P(Tails) = p."""

    p: float
    variant = "bernoulli"

    def __post_init__(self):
        _check_prob(self.p)

    def next_prob(self, context: BinarySequence) -> float:
        return self.p

    def log_likelihood(self, seq: BinarySequence) -> float:
        tails = sum(seq)
        heads = len(seq) - tails
        ll = 0.0
        for count, prob in ((tails, self.p), (heads, 1.0 - self.p)):
            if count:
                if prob <= 0.0:
                    return NEG_INF
                ll += count * math.log2(prob)
        return ll

    def description_length(self, config: DescriptionLengthConfig = DEFAULT_DL) -> float:
        return config.bernoulli_bits

    def to_dict(self) -> dict:
        return {"variant": self.variant, "p": self.p}

    def label(self) -> str:
        return f"bernoulli(p={self.p:g})"


@dataclass(frozen=True)
class WindowAverage(Model):
    """Memory-constrained Gambler's Fallacy model.

    The next flip tends toward the target probability p as a correction
    against the recent window: P(Tails) = clamp(2p - mean(last w flips)).
    With fewer than w flips of context the available prefix is used; with no
    context the target p itself is used.
    """

    p: float
    window: int = 5
    variant = "window_average"

    def __post_init__(self):
        _check_prob(self.p)
        if self.window < 1:
            raise ValueError("window must be >= 1")

    def next_prob(self, context: BinarySequence) -> float:
        if len(context) == 0:
            return self.p
        recent = context[-self.window :] if len(context) > self.window else context
        return min(1.0, max(0.0, 2.0 * self.p - recent.mean()))

    def description_length(self, config: DescriptionLengthConfig = DEFAULT_DL) -> float:
        return config.window_bits

    def to_dict(self) -> dict:
        return {"variant": self.variant, "p": self.p, "w": self.window}

    def label(self) -> str:
        return f"window(p={self.p:g}, w={self.window})"


@dataclass(frozen=True)
class MarkovChain(Model):
    """Order-k chain: P(Tails) conditioned on the last k flips.

    The table has one entry per context, indexed by the integer value of the
    context bits read oldest-to-newest (context [a, b] maps to a*2 + b, so
    the entry for "p(tails | 1 1)" sits at index 3).  Contexts shorter than
    k fall back to `fallback`.
    """

    order: int
    table: tuple
    fallback: float = 0.5
    variant = "markov_chain"

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("order must be >= 1")
        object.__setattr__(self, "table", tuple(float(x) for x in self.table))
        if len(self.table) != 2**self.order:
            raise ValueError(
                f"table must have {2 ** self.order} entries for order {self.order}, "
                f"got {len(self.table)}"
            )
        for x in self.table:
            _check_prob(x, "table entry")
        _check_prob(self.fallback, "fallback")

    @staticmethod
    def context_index(context: Iterable[int]) -> int:
        """Integer key for a full-length context, oldest bit most significant."""
        index = 0
        for bit in context:
            index = (index << 1) | bit
        return index

    def next_prob(self, context: BinarySequence) -> float:
        if len(context) < self.order:
            return self.fallback
        return self.table[self.context_index(context[-self.order :])]

    def description_length(self, config: DescriptionLengthConfig = DEFAULT_DL) -> float:
        return (2**self.order) * config.prob_bits

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "k": self.order,
            "table": list(self.table),
            "fallback": self.fallback,
        }

    def label(self) -> str:
        return f"markov(k={self.order})"


@dataclass(frozen=True)
class RegularRepeater(Model):
    """Deterministic cyclic repeater with an optional lapse rate.

    Emits pattern[(phase + t) mod |pattern|] at step t, where t counts the
    context length.  With lapse epsilon > 0 each flip deviates from the
    pattern with probability epsilon, which keeps likelihoods finite on
    noisy data; epsilon = 0 is the crisp formal-language hypothesis.
    """

    pattern: BinarySequence
    phase: int = 0
    epsilon: float = 0.0
    variant = "regular_repeater"

    def __post_init__(self):
        if not isinstance(self.pattern, BinarySequence):
            object.__setattr__(self, "pattern", BinarySequence(self.pattern))
        if len(self.pattern) == 0:
            raise ValueError("pattern must be non-empty")
        if not 0 <= self.phase < len(self.pattern):
            raise ValueError(f"phase must be in [0, {len(self.pattern)}), got {self.phase}")
        if not 0.0 <= self.epsilon < 0.5:
            raise ValueError(f"epsilon must be in [0, 0.5), got {self.epsilon}")

    def next_prob(self, context: BinarySequence) -> float:
        target = self.pattern[(self.phase + len(context)) % len(self.pattern)]
        return 1.0 - self.epsilon if target == 1 else self.epsilon

    def log_likelihood(self, seq: BinarySequence) -> float:
        mismatches = sum(
            1
            for t, flip in enumerate(seq)
            if flip != self.pattern[(self.phase + t) % len(self.pattern)]
        )
        if self.epsilon == 0.0:
            return 0.0 if mismatches == 0 else NEG_INF
        matches = len(seq) - mismatches
        return matches * math.log2(1.0 - self.epsilon) + mismatches * math.log2(self.epsilon)

    def description_length(self, config: DescriptionLengthConfig = DEFAULT_DL) -> float:
        # Pattern symbols plus enough bits to pick the phase.
        length = len(self.pattern)
        return float(length + (length - 1).bit_length())

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "pattern": self.pattern.to_bits(),
            "phase": self.phase,
            "epsilon": self.epsilon,
        }

    def label(self) -> str:
        suffix = f", eps={self.epsilon:g}" if self.epsilon else ""
        return f"repeat({self.pattern.to_bits()}, phase={self.phase}{suffix})"


def markov_fit(
    sequences: Sequence[BinarySequence], order: int, smoothing: float = 0.0
) -> MarkovChain:
    """Fit an order-k chain by counting transitions across the sequences.

    Each table entry is (count of context followed by Tails + smoothing) /
    (count of context + 2 * smoothing).  With zero smoothing, contexts never
    observed get 0.5, and a corpus with no transitions at all is an error.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    if smoothing < 0:
        raise ValueError("smoothing must be >= 0")
    size = 2**order
    seen = [0] * size
    tails = [0] * size
    mask = size - 1
    for seq in sequences:
        flips = tuple(seq)
        if len(flips) <= order:
            continue
        index = MarkovChain.context_index(flips[:order])
        for t in range(order, len(flips)):
            seen[index] += 1
            tails[index] += flips[t]
            index = ((index << 1) | flips[t]) & mask
    if smoothing == 0.0 and sum(seen) == 0:
        raise InsufficientDataError(
            f"no transitions of order {order} in the data and smoothing is 0"
        )
    table = [
        (tails[c] + smoothing) / (seen[c] + 2.0 * smoothing) if seen[c] or smoothing else 0.5
        for c in range(size)
    ]
    return MarkovChain(order=order, table=tuple(table), fallback=0.5)


_VARIANTS = {
    "bernoulli": Bernoulli,
    "window_average": WindowAverage,
    "markov_chain": MarkovChain,
    "regular_repeater": RegularRepeater,
}

_ALIASES = {
    "window": "window_average",
    "markov": "markov_chain",
    "repeater": "regular_repeater",
}


def model_from_dict(record: dict) -> Model:
    """Rebuild a model from its key-value record."""
    variant = _ALIASES.get(record.get("variant", ""), record.get("variant", ""))
    if variant == "bernoulli":
        return Bernoulli(p=float(record["p"]))
    if variant == "window_average":
        return WindowAverage(p=float(record["p"]), window=int(record.get("w", 5)))
    if variant == "markov_chain":
        return MarkovChain(
            order=int(record["k"]),
            table=tuple(float(x) for x in record["table"]),
            fallback=float(record.get("fallback", 0.5)),
        )
    if variant == "regular_repeater":
        return RegularRepeater(
            pattern=BinarySequence.from_bits(str(record["pattern"])),
            phase=int(record.get("phase", 0)),
            epsilon=float(record.get("epsilon", 0.0)),
        )
    raise ValueError(f"unknown model variant: {record.get('variant')!r}")


def model_from_string(text: str) -> Model:
    """Parse a compact model spec like 'bernoulli,p=0.5' or 'repeater,pattern=011'.

    Grammar: variant[,key=value]... with Markov tables written as
    semicolon-separated probabilities (e.g. 'markov,k=1,table=0.9;0.1').
    """
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise ValueError("empty model spec")
    record: dict = {"variant": parts[0].lower()}
    for part in parts[1:]:
        if "=" not in part:
            raise ValueError(f"expected key=value, got {part!r}")
        key, value = part.split("=", 1)
        key = key.strip()
        value = value.strip()
        if key == "table":
            record[key] = [float(x) for x in value.split(";") if x]
        elif key == "pattern":
            record[key] = value
        else:
            record[key] = float(value)
    for int_key in ("w", "k", "phase"):
        if int_key in record:
            record[int_key] = int(record[int_key])
    return model_from_dict(record)
