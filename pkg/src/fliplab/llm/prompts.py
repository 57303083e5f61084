"""Prompt templates for the generation and judgment protocols.

The chat form is the canonical three-message structure (system rules, the
weighted-coin request, and an assistant prefix opening with "[ " so flips
format consistently); the text form collapses the same content into a single
completion prompt.  The "[" doubles as the flip-region marker that mock
providers use to recover the context flips from a prompt.
"""

from __future__ import annotations

import re

from ..sequences import (
    DEFAULT_FORMAT,
    BinarySequence,
    TokenFormat,
    parse_flips,
    render,
    _GLUE,
)

__all__ = [
    "GENERATION_SYSTEM",
    "GENERATION_USER_TEMPLATE",
    "ASSISTANT_PREFIX",
    "JUDGMENT_QUESTION",
    "JUDGMENT_ANSWER_CUE",
    "percent",
    "chat_wrap",
    "generation_messages",
    "generation_prompt_text",
    "judgment_messages",
    "judgment_prompt_text",
    "prompt_text",
    "trailing_flips",
]

GENERATION_SYSTEM = (
    'Your responses will only consist of comma-separated "Heads" and "Tails" samples. '
    "Do not repeat the user's messages in your responses."
)

GENERATION_USER_TEMPLATE = (
    "Generate a sequence of 1000 random samples from a weighted coin, "
    "with {heads_pct}% probability of Heads and {tails_pct}% probability of Tails."
)

ASSISTANT_PREFIX = "[ "

JUDGMENT_QUESTION = (
    "Is the following sequence of coin flips generated by a random process with "
    "no pattern, or are they generated by a non-random algorithm?"
)

JUDGMENT_ANSWER_CUE = "Answer with a single word, Random or Non.\nAnswer:"

JUDGMENT_SYSTEM = (
    "You judge whether sequences of coin flips come from a random process. "
    "Your responses will only consist of a single word: Random or Non."
)


def percent(p: float) -> str:
    """Render a probability as a percentage, integral when it is one."""
    value = p * 100.0
    nearest = round(value)
    if abs(value - nearest) < 1e-9:
        return str(int(nearest))
    return format(value, "g")


def _user_line(p_tails: float) -> str:
    return GENERATION_USER_TEMPLATE.format(
        heads_pct=percent(1.0 - p_tails), tails_pct=percent(p_tails)
    )


def chat_wrap(
    p_tails: float,
    sequence: BinarySequence = BinarySequence(),
    fmt: TokenFormat = DEFAULT_FORMAT,
) -> list:
    """Three-message chat structure for the generation task."""
    return [
        {"role": "system", "content": GENERATION_SYSTEM},
        {"role": "user", "content": _user_line(p_tails)},
        {"role": "assistant", "content": ASSISTANT_PREFIX + render(sequence, fmt)},
    ]


generation_messages = chat_wrap


def generation_prompt_text(
    p_tails: float,
    sequence: BinarySequence = BinarySequence(),
    fmt: TokenFormat = DEFAULT_FORMAT,
) -> str:
    """Single-prompt variant of the generation task for completion endpoints."""
    return f"{_user_line(p_tails)}\n\n{ASSISTANT_PREFIX}{render(sequence, fmt)}"


def judgment_prompt_text(
    sequence: BinarySequence, fmt: TokenFormat = DEFAULT_FORMAT
) -> str:
    """Single-prompt judgment task; the next token should be Random or Non."""
    return (
        f"{JUDGMENT_QUESTION}\n\n"
        f"{ASSISTANT_PREFIX}{render(sequence, fmt)} ]\n\n"
        f"{JUDGMENT_ANSWER_CUE}"
    )


def judgment_messages(
    sequence: BinarySequence, fmt: TokenFormat = DEFAULT_FORMAT
) -> list:
    return [
        {"role": "system", "content": JUDGMENT_SYSTEM},
        {
            "role": "user",
            "content": (
                f"{JUDGMENT_QUESTION}\n\n"
                f"{ASSISTANT_PREFIX}{render(sequence, fmt)} ]\n\n"
                "Answer with a single word, Random or Non."
            ),
        },
    ]


def prompt_text(prompt) -> str:
    """Flatten a text-or-messages prompt to plain text."""
    if isinstance(prompt, str):
        return prompt
    return "\n".join(str(m.get("content", "")) for m in prompt)


def _token_regex(fmt: TokenFormat) -> re.Pattern:
    tokens = sorted((fmt.heads_token, fmt.tails_token), key=len, reverse=True)
    return re.compile("|".join(re.escape(t) for t in tokens), re.IGNORECASE)


def trailing_flips(prompt, fmt: TokenFormat = DEFAULT_FORMAT) -> BinarySequence:
    """Recover the context flips embedded at the end of a prompt.

    Prefers the region after the last "[" marker (the assistant prefix of the
    standard templates); otherwise falls back to the maximal flip run that
    closes the text.
    """
    text = prompt_text(prompt)
    if "[" in text:
        return parse_flips(text.rsplit("[", 1)[-1], fmt).sequence
    matches = list(_token_regex(fmt).finditer(text))
    start = None
    end = len(text)
    sep = fmt.separator
    for m in reversed(matches):
        gap = text[m.end() : end]
        gap = gap.replace(sep, "") if sep else gap
        if any(c not in _GLUE for c in gap):
            break
        start = m.start()
        end = m.start()
    if start is None:
        return BinarySequence()
    return parse_flips(text[start:], fmt).sequence
