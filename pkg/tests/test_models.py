from __future__ import annotations

import math
from fractions import Fraction

import pytest

import oracles
from fliplab.models import (
    NEG_INF,
    Bernoulli,
    DescriptionLengthConfig,
    InsufficientDataError,
    MarkovChain,
    RegularRepeater,
    SeededRng,
    WindowAverage,
    markov_fit,
    model_from_dict,
    model_from_string,
    sample_continuation,
)
from fliplab.sequences import BinarySequence


def seq(bits: str) -> BinarySequence:
    return BinarySequence.from_bits(bits)


ZOO = [
    Bernoulli(p=0.5),
    Bernoulli(p=0.3),
    Bernoulli(p=1.0),
    WindowAverage(p=0.5, window=5),
    WindowAverage(p=0.8, window=3),
    MarkovChain(order=1, table=(0.9, 0.2)),
    MarkovChain(order=2, table=(0.1, 0.5, 0.7, 0.9), fallback=0.4),
    RegularRepeater(pattern=seq("011")),
    RegularRepeater(pattern=seq("01"), phase=1),
    RegularRepeater(pattern=seq("011"), phase=2, epsilon=0.1),
]


class TestNextProb:
    def test_bernoulli_constant(self):
        model = Bernoulli(p=0.3)
        assert model.next_prob(BinarySequence()) == 0.3
        assert model.next_prob(seq("0110")) == 0.3

    def test_window_average_extremes(self):
        model = WindowAverage(p=0.5, window=5)
        assert model.next_prob(seq("11111")) == 0.0  # 2*0.5 - 1.0
        assert model.next_prob(seq("00000")) == 1.0
        assert model.next_prob(BinarySequence()) == 0.5

    def test_window_average_clamp(self):
        model = WindowAverage(p=0.8, window=5)
        # window mean 0.4 -> 1.6 - 0.4 = 1.2, clamped
        assert model.next_prob(seq("01010")) == 1.0

    def test_window_average_short_context_uses_prefix(self):
        model = WindowAverage(p=0.5, window=5)
        assert model.next_prob(seq("1")) == 0.0
        assert model.next_prob(seq("01")) == 0.5

    def test_repeater_cycles(self):
        model = RegularRepeater(pattern=seq("011"), phase=0)
        # position 4 mod 3 = 1 -> pattern[1] = 1
        assert model.next_prob(seq("0110")) == 1.0
        assert model.next_prob(BinarySequence()) == 0.0
        lapsed = RegularRepeater(pattern=seq("011"), phase=0, epsilon=0.1)
        assert lapsed.next_prob(BinarySequence()) == pytest.approx(0.1)

    def test_markov_lookup_and_fallback(self):
        model = MarkovChain(order=2, table=(0.1, 0.5, 0.7, 0.9), fallback=0.25)
        assert model.next_prob(seq("1")) == 0.25  # too short
        assert model.next_prob(seq("00")) == 0.1
        assert model.next_prob(seq("0101")) == 0.5  # context 01 -> index 1
        assert model.next_prob(seq("10")) == 0.7
        assert model.next_prob(seq("11")) == 0.9

    def test_always_in_unit_interval(self):
        import random

        rng = random.Random(17)
        for model in ZOO:
            for _ in range(50):
                context = BinarySequence(rng.randint(0, 1) for _ in range(rng.randint(0, 12)))
                p = model.next_prob(context)
                assert 0.0 <= p <= 1.0


class TestLogLikelihood:
    def test_fair_coin_eight_flips(self):
        # Any 8-flip sequence from a fair coin has probability 1 in 256.
        model = Bernoulli(p=0.5)
        for bits in ("01111111", "11010010", "00000000"):
            assert model.log_likelihood(seq(bits)) == pytest.approx(-8.0)

    def test_repeater_exact_match_and_violation(self):
        model = RegularRepeater(pattern=seq("011"), phase=0)
        assert model.log_likelihood(seq("011") * 4) == 0.0
        assert model.log_likelihood(seq("1")) == NEG_INF

    def test_degenerate_bernoulli(self):
        model = Bernoulli(p=1.0)
        assert model.log_likelihood(seq("11")) == 0.0
        assert model.log_likelihood(seq("10")) == NEG_INF

    @pytest.mark.parametrize("model", ZOO, ids=lambda m: m.label())
    def test_total_probability_sums_to_one(self, model):
        # Brute-force over all sequences of a given length.
        for n in (1, 4, 7):
            total = 0.0
            for bits in oracles.enumerate_bit_tuples(n):
                ll = model.log_likelihood(BinarySequence(bits))
                if ll != NEG_INF:
                    total += 2.0**ll
            assert total == pytest.approx(1.0, abs=1e-9)

    def test_total_probability_length_ten_fair_coin(self):
        model = Bernoulli(p=0.5)
        total = sum(
            2.0 ** model.log_likelihood(BinarySequence(bits))
            for bits in oracles.enumerate_bit_tuples(10)
        )
        assert total == pytest.approx(1.0, abs=1e-9)

    def test_chain_rule_matches_exact_rationals(self):
        model = WindowAverage(p=0.5, window=3)
        oracle = lambda ctx: oracles.window_average_next(Fraction(1, 2), 3, ctx)
        for bits in oracles.enumerate_bit_tuples(6):
            expected = oracles.sequence_probability(oracle, bits)
            got = model.log_likelihood(BinarySequence(bits))
            if expected == 0:
                assert got == NEG_INF
            else:
                assert 2.0**got == pytest.approx(float(expected), rel=1e-12)


class TestSampling:
    def test_degenerate_probability(self):
        model = Bernoulli(p=1.0)
        assert model.sample(4, SeededRng(0)) == seq("1111")

    def test_repeater_deterministic(self):
        model = RegularRepeater(pattern=seq("01"), phase=0)
        assert model.sample(5, SeededRng(1)) == seq("01010")

    def test_fair_coin_mean_in_band(self):
        model = Bernoulli(p=0.5)
        s = model.sample(50, SeededRng(123))
        assert 0.3 <= s.mean() <= 0.7

    def test_reproducible(self):
        model = WindowAverage(p=0.5, window=5)
        a = model.sample(80, SeededRng(99))
        b = model.sample(80, SeededRng(99))
        assert a == b
        c = model.sample(80, SeededRng(100))
        assert a != c  # astronomically unlikely to collide

    def test_continuation_respects_context(self):
        model = RegularRepeater(pattern=seq("011"), phase=0)
        continuation = sample_continuation(model, seq("011"), 4, SeededRng(5))
        assert continuation == seq("0110")

    def test_zero_length(self):
        assert Bernoulli(p=0.5).sample(0, SeededRng(0)) == BinarySequence()


class TestGamblerFallacyBehavior:
    """Pinned-seed behavioral contrast between the window model and a fair coin.

    Expected bands come from an independent pre-build simulation of the same
    statistics; the strict orderings are the load-bearing assertions.
    """

    @staticmethod
    def _stats(model, seed, n=200, length=50):
        sequences = [
            model.sample(length, SeededRng(SeededRng.derive(seed, "sample", i)))
            for i in range(n)
        ]
        alt = sum(s.alternation_rate() for s in sequences) / n
        run = sum(s.longest_run() for s in sequences) / n
        long_run_mass = sum(1 for s in sequences if s.longest_run() >= 7) / n
        return alt, run, long_run_mass

    def test_window_average_avoids_long_runs(self):
        wa_alt, wa_run, wa_mass = self._stats(WindowAverage(p=0.5, window=5), seed=0)
        be_alt, be_run, be_mass = self._stats(Bernoulli(p=0.5), seed=1)
        assert wa_alt > be_alt
        assert wa_run < be_run
        assert wa_mass < be_mass
        assert 0.53 < wa_alt < 0.61
        assert 0.46 < be_alt < 0.54
        assert 3.6 < wa_run < 4.7
        assert 5.3 < be_run < 6.8
        assert wa_mass < 0.02
        assert be_mass > 0.15


class TestMarkovFit:
    def test_repeating_011_order_three(self):
        data = [seq("011") * 17]  # 51 flips
        model = markov_fit(data, order=3)
        # Observed contexts cycle through 011, 110, 101; read oldest-to-newest.
        assert model.table[MarkovChain.context_index((0, 1, 1))] == 0.0  # p(0|..11) = 1
        assert model.table[MarkovChain.context_index((1, 0, 1))] == 1.0  # p(1|..01) = 1
        assert model.table[MarkovChain.context_index((1, 1, 0))] == 1.0  # p(1|..10) = 1
        for context in ((0, 0, 0), (0, 0, 1), (0, 1, 0), (1, 0, 0), (1, 1, 1)):
            assert model.table[MarkovChain.context_index(context)] == 0.5

    def test_alternating_order_one(self):
        model = markov_fit([seq("010101")], order=1)
        assert model.table[0] == 1.0  # p(1|0)
        assert model.table[1] == 0.0  # p(0|1) = 1

    def test_smoothing_on_empty_data(self):
        model = markov_fit([], order=2, smoothing=1.0)
        assert model.table == (0.5, 0.5, 0.5, 0.5)

    def test_insufficient_data(self):
        with pytest.raises(InsufficientDataError):
            markov_fit([seq("01")], order=3)
        with pytest.raises(InsufficientDataError):
            markov_fit([], order=1)

    def test_counts_pool_across_sequences(self):
        model = markov_fit([seq("00"), seq("01")], order=1)
        # Context 0 seen twice, followed by 0 then 1.
        assert model.table[0] == 0.5

    def test_smoothed_counts(self):
        model = markov_fit([seq("011")], order=1, smoothing=1.0)
        # Context 0 -> 1 once: (1+1)/(1+2); context 1 -> 1 once: (1+1)/(1+2).
        assert model.table[0] == pytest.approx(2 / 3)
        assert model.table[1] == pytest.approx(2 / 3)

    def test_training_likelihood_non_decreasing_in_order(self):
        # Evaluate only positions where every order has a learned context.
        data = seq("0110100110010110")
        k_max = 4
        scores = []
        for k in range(1, k_max + 1):
            model = markov_fit([data], order=k)
            ll = 0.0
            for t in range(k_max, len(data)):
                p = model.next_prob(data[:t])
                prob = p if data[t] == 1 else 1.0 - p
                ll += math.log2(prob)
            scores.append(ll)
        for lower, higher in zip(scores, scores[1:]):
            assert higher >= lower - 1e-9


class TestDescriptionLength:
    def test_repeater_rule(self):
        assert RegularRepeater(pattern=seq("011")).description_length() == 5.0
        assert RegularRepeater(pattern=seq("0")).description_length() == 1.0
        assert RegularRepeater(pattern=seq("01")).description_length() == 3.0
        assert RegularRepeater(pattern=seq("0110")).description_length() == 6.0

    def test_configured_constants(self):
        assert Bernoulli(p=0.5).description_length() == 2.0
        assert WindowAverage(p=0.5).description_length() == 4.0
        assert MarkovChain(order=2, table=(0.5,) * 4).description_length() == 16.0
        config = DescriptionLengthConfig(bernoulli_bits=1.0, window_bits=2.0, prob_bits=3.0)
        assert Bernoulli(p=0.5).description_length(config) == 1.0
        assert MarkovChain(order=1, table=(0.5, 0.5)).description_length(config) == 6.0


class TestValidation:
    def test_probability_bounds(self):
        with pytest.raises(ValueError):
            Bernoulli(p=1.5)
        with pytest.raises(ValueError):
            WindowAverage(p=0.5, window=0)
        with pytest.raises(ValueError):
            MarkovChain(order=1, table=(0.5,))
        with pytest.raises(ValueError):
            RegularRepeater(pattern=BinarySequence())
        with pytest.raises(ValueError):
            RegularRepeater(pattern=seq("01"), phase=2)
        with pytest.raises(ValueError):
            RegularRepeater(pattern=seq("01"), epsilon=0.5)


class TestSerialization:
    @pytest.mark.parametrize("model", ZOO, ids=lambda m: m.label())
    def test_dict_round_trip(self, model):
        assert model_from_dict(model.to_dict()) == model

    def test_fixed_field_names(self):
        assert Bernoulli(p=0.5).to_dict() == {"variant": "bernoulli", "p": 0.5}
        assert WindowAverage(p=0.5, window=5).to_dict() == {
            "variant": "window_average",
            "p": 0.5,
            "w": 5,
        }
        record = RegularRepeater(pattern=seq("011"), phase=1).to_dict()
        assert record == {
            "variant": "regular_repeater",
            "pattern": "011",
            "phase": 1,
            "epsilon": 0.0,
        }
        record = MarkovChain(order=1, table=(0.25, 0.75)).to_dict()
        assert record["variant"] == "markov_chain"
        assert record["k"] == 1
        assert record["table"] == [0.25, 0.75]

    def test_from_string(self):
        assert model_from_string("bernoulli,p=0.5") == Bernoulli(p=0.5)
        assert model_from_string("window,p=0.5,w=5") == WindowAverage(p=0.5, window=5)
        assert model_from_string("repeater,pattern=011,phase=1") == RegularRepeater(
            pattern=seq("011"), phase=1
        )
        assert model_from_string("markov,k=1,table=0.9;0.2") == MarkovChain(
            order=1, table=(0.9, 0.2)
        )
        with pytest.raises(ValueError):
            model_from_string("unknown,p=1")
        with pytest.raises(ValueError):
            model_from_string("")


class TestSeededRng:
    def test_identical_streams(self):
        a, b = SeededRng(7), SeededRng(7)
        assert [a.random() for _ in range(10)] == [b.random() for _ in range(10)]

    def test_derive_is_stable_and_mixing(self):
        assert SeededRng.derive(1, "x") == SeededRng.derive(1, "x")
        assert SeededRng.derive(1, "x") != SeededRng.derive(1, "y")
        assert SeededRng.derive(1, "x", 0) != SeededRng.derive(1, "x", 1)
