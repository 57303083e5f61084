from __future__ import annotations

import random

import pytest

from fliplab.sequences import (
    BinarySequence,
    TokenFormat,
    is_primitive,
    parse_flips,
    render,
)


def seq(bits: str) -> BinarySequence:
    return BinarySequence.from_bits(bits)


class TestBinarySequence:
    def test_construction_and_round_trip(self):
        s = BinarySequence([0, 1, 1])
        assert len(s) == 3
        assert s.to_bits() == "011"
        assert BinarySequence.from_bits("011") == s
        assert hash(seq("011")) == hash(s)

    def test_rejects_non_binary(self):
        with pytest.raises(ValueError):
            BinarySequence([0, 2])
        with pytest.raises(ValueError):
            BinarySequence.from_bits("01x")

    def test_immutable(self):
        s = seq("01")
        with pytest.raises(AttributeError):
            s._flips = (1,)

    def test_slicing_and_concat(self):
        s = seq("01101")
        assert s[1] == 1
        assert s[:3] == seq("011")
        assert s + seq("10") == seq("0110110")
        assert seq("01") * 3 == seq("010101")


class TestStatistics:
    def test_mean(self):
        assert seq("0111").mean() == 0.75
        assert seq("00").mean() == 0.0
        assert seq("01").mean() == 0.5
        with pytest.raises(ValueError):
            BinarySequence().mean()

    def test_running_mean(self):
        assert seq("10").running_mean() == [1.0, 0.5]
        assert seq("000").running_mean() == [0.0, 0.0, 0.0]
        assert seq("011").running_mean() == [0.0, 0.5, 2 / 3]
        with pytest.raises(ValueError):
            BinarySequence().running_mean()

    def test_longest_run(self):
        # HTTTTTTT: one head then a run of seven tails
        assert seq("01111111").longest_run() == 7
        assert seq("0101").longest_run() == 1
        assert BinarySequence().longest_run() == 0

    def test_alternation_rate(self):
        assert seq("0101").alternation_rate() == 1.0
        assert seq("0000").alternation_rate() == 0.0
        assert seq("011").alternation_rate() == 0.5
        with pytest.raises(ValueError):
            seq("0").alternation_rate()

    def test_subsequences(self):
        counts = seq("011").subsequences(2)
        assert counts == {seq("01"): 1, seq("11"): 1}
        counts = (seq("01") * 3).subsequences(2)
        assert counts == {seq("01"): 3, seq("10"): 2}
        counts = seq("00000").subsequences(3)
        assert counts == {seq("000"): 3}
        with pytest.raises(ValueError):
            seq("01").subsequences(3)
        with pytest.raises(ValueError):
            seq("01").subsequences(0)

    def test_subsequence_multiset_size(self):
        rng = random.Random(7)
        for _ in range(50):
            n = rng.randint(1, 40)
            s = BinarySequence(rng.randint(0, 1) for _ in range(n))
            k = rng.randint(1, n)
            assert sum(s.subsequences(k).values()) == n - k + 1

    def test_alternation_one_iff_longest_run_one(self):
        rng = random.Random(11)
        for _ in range(200):
            n = rng.randint(2, 30)
            s = BinarySequence(rng.randint(0, 1) for _ in range(n))
            assert (s.longest_run() == 1) == (s.alternation_rate() == 1.0)

    def test_running_mean_ends_at_mean(self):
        rng = random.Random(13)
        for _ in range(100):
            n = rng.randint(1, 60)
            s = BinarySequence(rng.randint(0, 1) for _ in range(n))
            assert s.running_mean()[-1] == pytest.approx(s.mean())

    def test_repeater_distinct_window_bound(self):
        # A pattern of length L can show at most L distinct windows of any size.
        for length in range(1, 5):
            for value in range(2**length):
                bits = tuple((value >> (length - 1 - i)) & 1 for i in range(length))
                stream = BinarySequence(bits * 30)
                for k in range(1, 26):
                    distinct = len(stream.subsequences(k))
                    assert distinct <= length


class TestPrimitivity:
    def test_examples(self):
        assert is_primitive(seq("0"))
        assert is_primitive(seq("01"))
        assert is_primitive(seq("011"))
        assert not is_primitive(seq("00"))
        assert not is_primitive(seq("0101"))
        assert not is_primitive(seq("011011"))
        with pytest.raises(ValueError):
            is_primitive(BinarySequence())


class TestParsing:
    def test_direct_token_mapping(self):
        result = parse_flips("Heads, Tails, Tails")
        assert result.sequence == seq("011")
        assert result.skipped == 0

    def test_stops_at_first_bad_token(self):
        result = parse_flips("Heads,Tails,banana,Tails")
        assert result.sequence == seq("01")
        assert result.skipped == len("banana,Tails")

    def test_empty_input(self):
        result = parse_flips("")
        assert result.sequence == BinarySequence()
        assert result.skipped == 0

    def test_no_parseable_token(self):
        result = parse_flips("nothing here")
        assert result.sequence == BinarySequence()
        assert result.skipped == len("nothing here")

    def test_case_insensitive_and_punctuation(self):
        result = parse_flips("[ heads, TAILS, Tails ]")
        assert result.sequence == seq("011")
        assert result.skipped == 0

    def test_whole_token_rule(self):
        result = parse_flips("Headsy, Tails")
        assert result.sequence == BinarySequence()
        result = parse_flips("Heads, Tailspin")
        assert result.sequence == seq("0")

    def test_trailing_separator_ok(self):
        result = parse_flips("Heads, Tails, ")
        assert result.sequence == seq("01")
        assert result.skipped == 0

    def test_custom_format(self):
        fmt = TokenFormat(heads_token="H", tails_token="T", separator=" ")
        result = parse_flips("H T T H", fmt)
        assert result.sequence == seq("0110")

    def test_prefix_tokens_prefer_longer(self):
        fmt = TokenFormat(heads_token="Head", tails_token="Heads", separator=", ")
        assert parse_flips("Heads, Head", fmt).sequence == seq("10")


class TestRendering:
    def test_examples(self):
        assert render(seq("01")) == "Heads, Tails"
        assert render(BinarySequence()) == ""
        assert render(seq("110")) == "Tails, Tails, Heads"

    def test_round_trip_default_format(self):
        rng = random.Random(3)
        for _ in range(200):
            n = rng.randint(0, 80)
            s = BinarySequence(rng.randint(0, 1) for _ in range(n))
            assert parse_flips(render(s)).sequence == s

    @pytest.mark.parametrize(
        "fmt",
        [
            TokenFormat(),
            TokenFormat("H", "T", " "),
            TokenFormat("heads", "tails", ","),
            TokenFormat("Zero", "One", " | "),
            TokenFormat("Head", "Heads", ", "),
        ],
    )
    def test_round_trip_formats(self, fmt):
        rng = random.Random(5)
        for _ in range(60):
            n = rng.randint(0, 40)
            s = BinarySequence(rng.randint(0, 1) for _ in range(n))
            assert parse_flips(render(s, fmt), fmt).sequence == s


class TestTokenFormat:
    def test_validation(self):
        with pytest.raises(ValueError):
            TokenFormat(heads_token="", tails_token="T")
        with pytest.raises(ValueError):
            TokenFormat(heads_token="Same", tails_token="same")
