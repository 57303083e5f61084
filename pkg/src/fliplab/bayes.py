"""Bayesian model selection over small, enumerable hypothesis spaces.

All probability arithmetic is carried out in base-2 log space with an
explicit log-sum-exp primitive; impossible hypotheses are represented by a
genuine -inf rather than a large negative sentinel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Iterable, Sequence

from .models import (
    DEFAULT_DL,
    NEG_INF,
    Bernoulli,
    DescriptionLengthConfig,
    Model,
    RegularRepeater,
)
from .sequences import BinarySequence, is_primitive

__all__ = [
    "log2sumexp",
    "Hypothesis",
    "HypothesisSpace",
    "Posterior",
    "RandomnessScore",
    "posterior",
    "predictive_next",
    "randomness_score",
    "judgment_curve",
    "curve_csv_rows",
    "CURVE_CSV_HEADER",
    "enumerate_repeaters",
    "ImpossibleEvidenceError",
]

_NORMALIZATION_TOL = 1e-9


class ImpossibleEvidenceError(ValueError):
    """Every hypothesis assigns zero probability to the observed data."""


def log2sumexp(values: Iterable[float]) -> float:
    """log2 of the sum of 2**v over the values; -inf entries contribute zero."""
    values = [v for v in values if v != NEG_INF]
    if not values:
        return NEG_INF
    peak = max(values)
    if peak == math.inf:
        return math.inf
    return peak + math.log2(sum(2.0 ** (v - peak) for v in values))


@dataclass(frozen=True)
class Hypothesis:
    """A candidate generator together with its prior log2-weight."""

    model: Model
    log2_prior: float


@dataclass(frozen=True)
class HypothesisSpace:
    """Weighted hypothesis set with one designated 'random' Bernoulli member."""

    hypotheses: tuple
    random_index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "hypotheses", tuple(self.hypotheses))
        if not self.hypotheses:
            raise ValueError("hypothesis space must be non-empty")
        if not 0 <= self.random_index < len(self.hypotheses):
            raise ValueError(f"random_index {self.random_index} out of range")
        if not isinstance(self.hypotheses[self.random_index].model, Bernoulli):
            raise ValueError("the random hypothesis must be a Bernoulli model")
        total = 2.0 ** log2sumexp(h.log2_prior for h in self.hypotheses)
        if abs(total - 1.0) > _NORMALIZATION_TOL:
            raise ValueError(f"priors must normalize to 1, got {total}")

    def __len__(self) -> int:
        return len(self.hypotheses)

    def __iter__(self):
        return iter(self.hypotheses)

    @property
    def random_hypothesis(self) -> Hypothesis:
        return self.hypotheses[self.random_index]

    @classmethod
    def uniform(cls, models: Sequence[Model], random_index: int = 0) -> "HypothesisSpace":
        """Equal prior weight on every model."""
        prior = -math.log2(len(models))
        return cls(
            hypotheses=tuple(Hypothesis(m, prior) for m in models),
            random_index=random_index,
        )

    @classmethod
    def from_weights(
        cls, models: Sequence[Model], weights: Sequence[float], random_index: int = 0
    ) -> "HypothesisSpace":
        """Positive unnormalized weights; normalization happens here."""
        if len(models) != len(weights):
            raise ValueError("models and weights must have equal length")
        if any(w <= 0 for w in weights):
            raise ValueError("weights must be positive")
        logs = [math.log2(w) for w in weights]
        norm = log2sumexp(logs)
        return cls(
            hypotheses=tuple(
                Hypothesis(m, lw - norm) for m, lw in zip(models, logs)
            ),
            random_index=random_index,
        )


@dataclass(frozen=True)
class Posterior:
    """Per-hypothesis log2 posterior weights; normalizes to 1 over finite entries."""

    log2_weights: tuple

    def weight(self, index: int) -> float:
        return 2.0 ** self.log2_weights[index]

    def weights(self) -> list:
        return [2.0**w for w in self.log2_weights]

    def argmax(self) -> int:
        """Index of the maximum-posterior hypothesis; ties go to the lowest index."""
        best = 0
        for i, w in enumerate(self.log2_weights):
            if w > self.log2_weights[best]:
                best = i
        return best


@dataclass(frozen=True)
class RandomnessScore:
    """Log-likelihood ratio (bits) of the random model vs the best non-random one.

    Negative values mean the sequence looks non-random.  When no non-random
    hypothesis assigns positive likelihood the score is +inf and flagged, with
    no MAP index.
    """

    bits: float
    map_index: int | None

    @property
    def flagged(self) -> bool:
        return self.map_index is None


def posterior(space: HypothesisSpace, x: BinarySequence) -> Posterior:
    """Posterior over hypotheses given the context x, entirely in log space."""
    joint = [h.log2_prior + h.model.log_likelihood(x) for h in space]
    norm = log2sumexp(joint)
    if norm == NEG_INF:
        raise ImpossibleEvidenceError(
            f"no hypothesis assigns positive probability to {x.to_bits()!r}"
        )
    return Posterior(log2_weights=tuple(j - norm for j in joint))


def predictive_next(
    space: HypothesisSpace, x: BinarySequence, mode: str = "marginalize"
) -> float:
    """Posterior-predictive probability that the next flip is Tails.

    'marginalize' mixes every hypothesis by posterior weight; 'map' follows
    only the maximum-posterior hypothesis, the greedy-decoding analogue.
    """
    post = posterior(space, x)
    if mode == "marginalize":
        return sum(
            post.weight(i) * h.model.next_prob(x)
            for i, h in enumerate(space)
            if post.log2_weights[i] != NEG_INF
        )
    if mode == "map":
        return space.hypotheses[post.argmax()].model.next_prob(x)
    raise ValueError(f"mode must be 'marginalize' or 'map', got {mode!r}")


def randomness_score(x: BinarySequence, space: HypothesisSpace) -> RandomnessScore:
    """Subjective randomness of x: log2 p(x|random) - max non-random posterior mass.

    The non-random priors are renormalized among themselves so the
    random-vs-non-random comparison is insensitive to how many non-random
    hypotheses the space happens to enumerate.
    """
    if len(x) == 0:
        raise ValueError("randomness score undefined for the empty sequence")
    random_ll = space.random_hypothesis.model.log_likelihood(x)
    others = [
        (i, h) for i, h in enumerate(space.hypotheses) if i != space.random_index
    ]
    if not others:
        raise ValueError("space has no non-random hypothesis")
    norm = log2sumexp(h.log2_prior for _, h in others)
    best_index: int | None = None
    best = NEG_INF
    for i, h in others:
        ll = h.model.log_likelihood(x)
        if ll == NEG_INF:
            continue
        value = h.log2_prior - norm + ll
        if value > best:
            best = value
            best_index = i
    if best_index is None:
        return RandomnessScore(bits=math.inf, map_index=None)
    return RandomnessScore(bits=random_ll - best, map_index=best_index)


def judgment_curve(
    pattern: BinarySequence, n_range: Sequence[int], space: HypothesisSpace
) -> list:
    """Posterior weight of the random hypothesis on pattern^n, per n.

    Returns (|x|, p_random) pairs, one per repetition count in ascending
    n_range.
    """
    if len(pattern) == 0:
        raise ValueError("pattern must be non-empty")
    if not n_range or list(n_range) != sorted(n_range):
        raise ValueError("n_range must be non-empty and ascending")
    points = []
    for n in n_range:
        x = pattern * n
        p_random = posterior(space, x).weight(space.random_index)
        points.append((len(x), p_random))
    return points


CURVE_CSV_HEADER = ("concept", "n", "x_len", "p_random", "score_bits", "map_hypothesis")


def curve_csv_rows(
    pattern: BinarySequence, n_range: Sequence[int], space: HypothesisSpace
) -> list:
    """Judgment-curve points joined with per-point randomness scores.

    One row per n: (concept bits, n, |x|, p_random, score bits, MAP
    hypothesis label); the score fields are blank-on-infinity friendly via
    math.inf and None.
    """
    rows = []
    for (x_len, p_random), n in zip(judgment_curve(pattern, n_range, space), n_range):
        score = randomness_score(pattern * n, space)
        label = (
            "" if score.map_index is None
            else space.hypotheses[score.map_index].model.label()
        )
        rows.append((pattern.to_bits(), n, x_len, p_random, score.bits, label))
    return rows


def enumerate_repeaters(
    max_pattern_len: int,
    epsilon: float = 0.0,
    dl_config: DescriptionLengthConfig = DEFAULT_DL,
    random_p: float = 0.5,
) -> HypothesisSpace:
    """Hypothesis space of all primitive cyclic repeaters up to a pattern length.

    Patterns that are repetitions of a shorter pattern are excluded, and each
    rotation class is enumerated once as its lexicographically-smallest
    pattern with every phase variant.  Prior weight is 2**(-description
    length) for every hypothesis, including the random Bernoulli, with a
    joint renormalization at the end.
    """
    if not 1 <= max_pattern_len <= 8:
        raise ValueError("max_pattern_len must be in [1, 8]")
    models: list[Model] = [Bernoulli(p=random_p)]
    for length in range(1, max_pattern_len + 1):
        for bits in product((0, 1), repeat=length):
            pattern = BinarySequence(bits)
            if not is_primitive(pattern):
                continue
            rotations = [bits[r:] + bits[:r] for r in range(length)]
            if bits != min(rotations):
                continue  # enumerate each rotation class once, via its phases
            for phase in range(length):
                models.append(
                    RegularRepeater(pattern=pattern, phase=phase, epsilon=epsilon)
                )
    weights = [2.0 ** -m.description_length(dl_config) for m in models]
    return HypothesisSpace.from_weights(models, weights, random_index=0)
