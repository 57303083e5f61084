"""Binary flip sequences: representation, text parsing, and descriptive statistics.

A flip is 0 (Heads) or 1 (Tails).  Everything downstream -- generator models,
Bayesian scoring, prediction trees, complexity metrics -- consumes the
:class:`BinarySequence` type defined here.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Iterator

__all__ = [
    "BinarySequence",
    "TokenFormat",
    "ParseResult",
    "DEFAULT_FORMAT",
    "parse_flips",
    "render",
    "is_primitive",
]


class BinarySequence:
    """Immutable ordered run of binary flips (0 = Heads, 1 = Tails)."""

    __slots__ = ("_flips",)

    def __init__(self, flips: Iterable[int] = ()):
        values = tuple(int(f) for f in flips)
        for v in values:
            if v not in (0, 1):
                raise ValueError(f"flip values must be 0 or 1, got {v}")
        object.__setattr__(self, "_flips", values)

    def __setattr__(self, name, value):
        raise AttributeError("BinarySequence is immutable")

    @classmethod
    def from_bits(cls, text: str) -> "BinarySequence":
        """Parse a compact '0'/'1' string, e.g. '0110'."""
        if any(c not in "01" for c in text):
            raise ValueError(f"not a 0/1 string: {text!r}")
        return cls(int(c) for c in text)

    def to_bits(self) -> str:
        """Compact '0'/'1' rendering used for persistence."""
        return "".join(str(f) for f in self._flips)

    @property
    def flips(self) -> tuple:
        return self._flips

    def __len__(self) -> int:
        return len(self._flips)

    def __iter__(self) -> Iterator[int]:
        return iter(self._flips)

    def __getitem__(self, index):
        if isinstance(index, slice):
            return BinarySequence(self._flips[index])
        return self._flips[index]

    def __add__(self, other: "BinarySequence") -> "BinarySequence":
        return BinarySequence(self._flips + tuple(other))

    def __mul__(self, n: int) -> "BinarySequence":
        return BinarySequence(self._flips * n)

    def __eq__(self, other) -> bool:
        if isinstance(other, BinarySequence):
            return self._flips == other._flips
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self._flips)

    def __repr__(self) -> str:
        return f"BinarySequence('{self.to_bits()}')"

    # ---- descriptive statistics ------------------------------------------

    def mean(self) -> float:
        """Arithmetic mean of flip values (fraction of Tails)."""
        if not self._flips:
            raise ValueError("mean undefined for empty sequence")
        return sum(self._flips) / len(self._flips)

    def running_mean(self) -> list:
        """Element t is the mean of flips 0..t inclusive."""
        if not self._flips:
            raise ValueError("running mean undefined for empty sequence")
        out = []
        total = 0
        for t, f in enumerate(self._flips, start=1):
            total += f
            out.append(total / t)
        return out

    def longest_run(self) -> int:
        """Maximum length of any maximal constant sub-run (0 when empty)."""
        best = 0
        current = 0
        previous = None
        for f in self._flips:
            current = current + 1 if f == previous else 1
            previous = f
            if current > best:
                best = current
        return best

    def alternation_rate(self) -> float:
        """Fraction of consecutive flip pairs that differ."""
        if len(self._flips) < 2:
            raise ValueError("alternation rate needs at least 2 flips")
        changes = sum(1 for a, b in zip(self._flips, self._flips[1:]) if a != b)
        return changes / (len(self._flips) - 1)

    def subsequences(self, k: int) -> Counter:
        """Multiset of all contiguous length-k windows."""
        if not 1 <= k <= len(self._flips):
            raise ValueError(f"window size {k} out of range for length {len(self._flips)}")
        return Counter(self[i : i + k] for i in range(len(self._flips) - k + 1))


def is_primitive(seq: BinarySequence) -> bool:
    """True when the sequence is not a repetition of any shorter pattern."""
    if len(seq) == 0:
        raise ValueError("primitivity undefined for empty sequence")
    bits = seq.to_bits()
    # Smallest nonzero rotation mapping the string to itself equals its length
    # exactly when the string has no shorter period.
    return (bits + bits).find(bits, 1) == len(bits)


@dataclass(frozen=True)
class TokenFormat:
    """Text spelling of flips: token per side plus the joining separator."""

    heads_token: str = "Heads"
    tails_token: str = "Tails"
    separator: str = ", "

    def __post_init__(self):
        if not self.heads_token or not self.tails_token:
            raise ValueError("flip tokens must be non-empty")
        if self.heads_token.lower() == self.tails_token.lower():
            raise ValueError("heads and tails tokens must differ (case-insensitively)")


DEFAULT_FORMAT = TokenFormat()

# Characters treated as token glue: separators, list brackets, sentence
# punctuation and quotes that chat models wrap flip lists in.
_GLUE = set(" \t\r\n,.;:!?[](){}\"'`*")


@dataclass(frozen=True)
class ParseResult:
    """Outcome of parsing flip text: the parsed prefix plus diagnostics."""

    sequence: BinarySequence
    skipped: int  # count of trailing characters not consumed

    def __len__(self) -> int:
        return len(self.sequence)


def parse_flips(text: str, fmt: TokenFormat = DEFAULT_FORMAT) -> ParseResult:
    """Parse the maximal prefix of whole flip tokens from free text.

    Tokens match case-insensitively; separators and surrounding
    whitespace/punctuation are skipped.  Parsing stops at the first
    unparseable token, so malformed model output is truncated rather than
    patched.  An input with no parseable token yields an empty sequence,
    never an error.
    """
    lower = text.lower()
    tokens = sorted(
        [(fmt.heads_token.lower(), 0), (fmt.tails_token.lower(), 1)],
        key=lambda t: -len(t[0]),
    )
    sep = fmt.separator
    flips = []
    i = 0
    n = len(text)
    while True:
        # Consume glue between tokens, but never text that starts a token.
        while i < n:
            if any(lower.startswith(tok, i) for tok, _ in tokens):
                break
            if sep and text.startswith(sep, i):
                i += len(sep)
            elif text[i] in _GLUE:
                i += 1
            else:
                break
        if i >= n:
            return ParseResult(BinarySequence(flips), 0)
        matched = False
        for tok, value in tokens:  # longest token first
            if lower.startswith(tok, i):
                end = i + len(tok)
                # Whole-token rule: reject "Headsy" style run-ons.
                if end < n and tok[-1].isalnum() and text[end].isalnum():
                    continue
                flips.append(value)
                i = end
                matched = True
                break
        if not matched:
            return ParseResult(BinarySequence(flips), n - i)


def render(seq: BinarySequence, fmt: TokenFormat = DEFAULT_FORMAT) -> str:
    """Render flips as text; inverse of :func:`parse_flips` for sane formats."""
    spell = (fmt.heads_token, fmt.tails_token)
    return fmt.separator.join(spell[f] for f in seq)
