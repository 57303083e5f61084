from __future__ import annotations

import csv
import json
from pathlib import Path

import pytest

from fliplab.bayes import HypothesisSpace
from fliplab.harness.cli import main
from fliplab.harness.config import ExperimentConfig
from fliplab.harness.report import report
from fliplab.harness.runner import (
    RunError,
    run_generation,
    run_judgment,
    run_learning_curve,
)
from fliplab.llm import (
    BayesProvider,
    ConstantJudgeProvider,
    MockFlipProvider,
    ProviderConfig,
)
from fliplab.models import Bernoulli, RegularRepeater, WindowAverage
from fliplab.sequences import BinarySequence


def seq(bits: str) -> BinarySequence:
    return BinarySequence.from_bits(bits)


def mock_config(model, kind="generation", **overrides) -> ExperimentConfig:
    defaults = dict(
        kind=kind,
        provider=ProviderConfig(kind="mock", mock_model=model),
        p_grid=(0.3, 0.5, 0.7),
        samples_per_cell=40,
        crop_len=30,
        concepts=("01", "011"),
        n_range=(1, 2, 3),
        depth_list=(4,),
        seed=7,
    )
    defaults.update(overrides)
    return ExperimentConfig(**defaults)


def read_csv(path: Path) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


def tree_bytes(root: Path) -> dict:
    return {
        p.relative_to(root).as_posix(): p.read_bytes()
        for p in sorted(root.rglob("*.csv"))
    }


class TestExperimentConfig:
    def test_json_round_trip(self):
        config = mock_config(WindowAverage(p=0.5, window=5))
        rebuilt = ExperimentConfig.from_dict(json.loads(config.to_json()))
        assert rebuilt == config
        assert rebuilt.digest() == config.digest()

    def test_digest_changes_with_content(self):
        a = mock_config(Bernoulli(p=0.5))
        b = mock_config(Bernoulli(p=0.5), seed=8)
        assert a.digest() != b.digest()

    def test_validation(self):
        with pytest.raises(ValueError):
            mock_config(Bernoulli(p=0.5), p_grid=())
        with pytest.raises(ValueError):
            mock_config(Bernoulli(p=0.5), crop_len=0)
        with pytest.raises(ValueError):
            mock_config(Bernoulli(p=0.5), concepts=("0101",))
        with pytest.raises(ValueError):
            mock_config(Bernoulli(p=0.5), n_range=(3, 1))
        with pytest.raises(ValueError):
            mock_config(Bernoulli(p=0.5), kind="bogus")
        with pytest.raises(ValueError):
            ExperimentConfig.from_dict({"version": 99})

    def test_defaults_match_protocol(self):
        config = ExperimentConfig(
            kind="generation", provider=ProviderConfig(kind="mock")
        )
        assert config.p_grid == (
            0.05, 0.1, 0.2, 0.3, 0.4, 0.49, 0.5, 0.51, 0.6, 0.7, 0.8, 0.9, 0.95,
        )
        assert config.samples_per_cell == 200
        assert config.crop_len == 50
        assert config.subseq_ks == (5, 10, 15, 20, 25)
        assert config.concepts == ("0", "1", "01", "001", "011")
        assert config.depth_list == (4, 6)


class TestGenerationRun:
    def test_small_grid_end_to_end(self, tmp_path):
        config = mock_config(WindowAverage(p=0.5, window=5))
        summary = run_generation(config, tmp_path / "run")
        assert summary.ok
        assert summary.total_cells == 3
        assert summary.completed == 3

        rows = read_csv(tmp_path / "run" / "gambler_stats.csv")
        assert rows[0] == [
            "p", "n_sequences", "n_flagged",
            "mean_of_means", "mean_longest_run", "mean_alternation_rate",
        ]
        assert len(rows) == 4
        for row, p in zip(rows[1:], (0.3, 0.5, 0.7)):
            assert float(row[0]) == p
            assert int(row[1]) == 40
            assert abs(float(row[3]) - p) < 0.08  # 40 samples, loose band

        complexity = read_csv(tmp_path / "run" / "complexity.csv")
        assert complexity[0] == [
            "label", "declared_p", "metric", "k", "raw", "baseline", "ratio", "seed",
        ]
        # 5 subsequence ks + gzip + levenshtein per cell
        assert len(complexity) == 1 + 3 * 7

        hist = read_csv(tmp_path / "run" / "hist_means.csv")
        assert len(hist) == 1 + 3 * 50
        assert float(hist[1][1]) == 0.0 and float(hist[50][2]) == 1.0

        running = read_csv(tmp_path / "run" / "running_means.csv")
        assert len(running) == 1 + 3 * 40 * 30

        store = (tmp_path / "run" / "records.jsonl").read_text().splitlines()
        assert len(store) == 3 * 40  # one line per persisted sample record
        entry = json.loads(store[0])
        assert {"config_digest", "cell", "request_hash", "bits"} <= set(entry)

    def test_crop_rule(self, tmp_path):
        config = mock_config(Bernoulli(p=0.5), crop_len=10)
        run_generation(config, tmp_path / "run")
        cell = json.loads((tmp_path / "run" / "cells" / "gen-00.json").read_text())
        assert all(len(r["bits"]) == 10 for r in cell["records"])
        assert all(r["parsed_len"] >= 10 for r in cell["records"])

    def test_repeat_runs_are_byte_identical(self, tmp_path):
        config = mock_config(WindowAverage(p=0.5, window=5))
        run_generation(config, tmp_path / "a")
        run_generation(config, tmp_path / "b")
        assert tree_bytes(tmp_path / "a") == tree_bytes(tmp_path / "b")

    def test_resume_reproduces_uninterrupted_run(self, tmp_path):
        config = mock_config(WindowAverage(p=0.5, window=5))
        run_generation(config, tmp_path / "full")
        # Simulate a killed run: two finished cells, the rest missing.
        partial = tmp_path / "partial"
        run_generation(config, partial)
        (partial / "cells" / "gen-01.json").unlink()
        (partial / "gambler_stats.csv").unlink()
        summary = run_generation(config, partial, resume=True)
        assert summary.ok
        assert summary.skipped == 2
        assert summary.completed == 1
        assert tree_bytes(tmp_path / "full") == tree_bytes(partial)

    def test_non_resume_refuses_existing_cells(self, tmp_path):
        config = mock_config(Bernoulli(p=0.5))
        run_generation(config, tmp_path / "run")
        with pytest.raises(RunError):
            run_generation(config, tmp_path / "run")

    def test_config_mismatch_detected(self, tmp_path):
        run_generation(mock_config(Bernoulli(p=0.5)), tmp_path / "run")
        changed = mock_config(Bernoulli(p=0.5), seed=99)
        with pytest.raises(RunError):
            run_generation(changed, tmp_path / "run", resume=True)

    def test_flagged_responses_are_kept_not_dropped(self, tmp_path):
        class TruncatingProvider(MockFlipProvider):
            def complete(self, prompt, n=1, *, max_tokens=None, seed=None):
                records = super().complete(prompt, n, max_tokens=max_tokens, seed=seed)
                out = []
                for i, record in enumerate(records):
                    if i % 2 == 0:
                        record = type(record)(
                            request_hash=record.request_hash,
                            prompt=record.prompt,
                            response_text="Heads, banana",
                            token_logprobs=None,
                            created=record.created,
                            provider=record.provider,
                        )
                    out.append(record)
                return out

        config = mock_config(Bernoulli(p=0.5), p_grid=(0.5,), samples_per_cell=10)
        provider = TruncatingProvider(Bernoulli(p=0.5))
        summary = run_generation(config, tmp_path / "run", provider=provider)
        assert summary.ok
        cell = json.loads((tmp_path / "run" / "cells" / "gen-00.json").read_text())
        assert len(cell["records"]) == 10  # every response accounted for
        flagged = [r for r in cell["records"] if r["flagged"]]
        assert len(flagged) == 5
        assert all(r["skipped"] > 0 for r in flagged)
        assert cell["derived"]["n_flagged"] == 5


class TestJudgmentRun:
    def test_bayes_provider_matches_closed_form(self, tmp_path):
        space = HypothesisSpace.uniform(
            [Bernoulli(p=0.5), RegularRepeater(pattern=seq("011"))], random_index=0
        )
        config = mock_config(
            Bernoulli(p=0.5), kind="judgment", concepts=("011",), n_range=tuple(range(1, 8))
        )
        summary = run_judgment(
            config, tmp_path / "run", provider=BayesProvider(space)
        )
        assert summary.ok
        rows = read_csv(tmp_path / "run" / "judgment.csv")
        assert rows[0] == ["concept", "n", "x_len", "p_random", "method", "flagged"]
        for row in rows[1:]:
            n = int(row[1])
            assert int(row[2]) == 3 * n
            expected = 2.0 ** (-3 * n) / (2.0 ** (-3 * n) + 1.0)
            assert float(row[3]) == pytest.approx(expected, abs=1e-9)
            assert row[4] == "logprobs"
            assert row[5] == "False"

    def test_constant_judge_flat_curve(self, tmp_path):
        config = mock_config(Bernoulli(p=0.5), kind="judgment")
        summary = run_judgment(
            config, tmp_path / "run", provider=ConstantJudgeProvider(p_random=1.0)
        )
        assert summary.ok
        rows = read_csv(tmp_path / "run" / "judgment.csv")
        assert all(float(row[3]) == 1.0 for row in rows[1:])

    def test_sampling_fallback_is_flagged(self, tmp_path):
        class NoLogprobJudge(ConstantJudgeProvider):
            def alternatives(self, prompt):
                return {}

        config = mock_config(
            Bernoulli(p=0.5), kind="judgment", concepts=("01",), n_range=(1, 2),
            samples_per_cell=100,
        )
        summary = run_judgment(
            config, tmp_path / "run", provider=NoLogprobJudge(p_random=0.8)
        )
        assert summary.ok
        rows = read_csv(tmp_path / "run" / "judgment.csv")
        for row in rows[1:]:
            assert row[4] == "sampled"
            assert row[5] == "True"
            assert 0.6 < float(row[3]) <= 1.0

    def test_rows_ordered_and_deterministic(self, tmp_path):
        space = HypothesisSpace.uniform(
            [Bernoulli(p=0.5), RegularRepeater(pattern=seq("011"))], random_index=0
        )
        config = mock_config(Bernoulli(p=0.5), kind="judgment")
        run_judgment(config, tmp_path / "a", provider=BayesProvider(space))
        run_judgment(config, tmp_path / "b", provider=BayesProvider(space))
        a = (tmp_path / "a" / "judgment.csv").read_bytes()
        assert a == (tmp_path / "b" / "judgment.csv").read_bytes()
        rows = read_csv(tmp_path / "a" / "judgment.csv")[1:]
        keys = [(row[0], int(row[1])) for row in rows]
        assert keys == sorted(keys, key=lambda key: (config.concepts.index(key[0]), key[1]))


class TestLearningCurveRun:
    def test_repeater_provider_saturates(self, tmp_path):
        config = mock_config(Bernoulli(p=0.5), kind="learning_curve", concepts=("011",))
        provider = MockFlipProvider(RegularRepeater(pattern=seq("011")))
        summary = run_learning_curve(config, tmp_path / "run", provider=provider)
        assert summary.ok
        rows = read_csv(tmp_path / "run" / "curves.csv")
        assert rows[0] == ["concept", "n", "x_len", "d", "mass"]
        assert all(float(row[4]) == pytest.approx(1.0, abs=1e-9) for row in rows[1:])

    def test_fair_coin_flat_at_analytic_value(self, tmp_path):
        config = mock_config(
            Bernoulli(p=0.5), kind="learning_curve", concepts=("011",), depth_list=(6,),
            n_range=(1, 2),
        )
        provider = MockFlipProvider(Bernoulli(p=0.5))
        run_learning_curve(config, tmp_path / "run", provider=provider)
        rows = read_csv(tmp_path / "run" / "curves.csv")
        for row in rows[1:]:
            assert float(row[4]) == pytest.approx(3 / 64, abs=1e-9)

    def test_bayes_mass_increases_toward_one(self, tmp_path):
        space = HypothesisSpace.uniform(
            [Bernoulli(p=0.5), RegularRepeater(pattern=seq("011"))], random_index=0
        )
        config = mock_config(
            Bernoulli(p=0.5), kind="learning_curve", concepts=("011",), depth_list=(6,),
            n_range=(1, 2, 4, 8),
        )
        run_learning_curve(config, tmp_path / "run", provider=BayesProvider(space))
        rows = read_csv(tmp_path / "run" / "curves.csv")
        masses = [float(row[4]) for row in rows[1:]]
        assert all(b > a for a, b in zip(masses, masses[1:]))
        assert masses[-1] > 0.999

    def test_tree_documents_persisted(self, tmp_path):
        config = mock_config(
            Bernoulli(p=0.5), kind="learning_curve", concepts=("01",), depth_list=(4,),
            n_range=(1,),
        )
        run_learning_curve(
            config, tmp_path / "run", provider=MockFlipProvider(Bernoulli(p=0.5))
        )
        doc = json.loads((tmp_path / "run" / "trees" / "cur-01-n01-d4.json").read_text())
        assert doc["depth"] == 4
        assert doc["root_context"] == "01"
        assert len(doc["edges"]) == 15
        flat = read_csv(tmp_path / "run" / "trees" / "cur-01-n01-d4.csv")
        assert flat[0] == ["path", "probability", "in_concept"]
        assert len(flat) == 1 + 16
        assert sum(int(row[2]) for row in flat[1:]) == 2  # the two rotations of 01


class TestReport:
    def test_rebuild_matches_runner_output(self, tmp_path):
        config = mock_config(WindowAverage(p=0.5, window=5))
        run_generation(config, tmp_path / "run")
        before = tree_bytes(tmp_path / "run")
        outcome = report(tmp_path / "run")
        assert outcome["gaps"] == []
        assert tree_bytes(tmp_path / "run") == before

    def test_missing_cells_reported_as_gaps(self, tmp_path):
        config = mock_config(Bernoulli(p=0.5))
        run_generation(config, tmp_path / "run")
        (tmp_path / "run" / "cells" / "gen-01.json").unlink()
        outcome = report(tmp_path / "run")
        assert any(g.get("cell") == "gen-01" for g in outcome["gaps"])
        rows = read_csv(tmp_path / "run" / "gambler_stats.csv")
        assert len(rows) == 3  # header + 2 remaining cells
        assert [float(r[0]) for r in rows[1:]] == [0.3, 0.7]

    def test_not_a_run_dir(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            report(tmp_path / "nothing")


class TestCli:
    def test_score_bits_sequence(self, capsys):
        code = main(["score", "01010101"])
        out = capsys.readouterr().out
        assert code == 0
        assert "randomness score: -" in out
        assert "repeat(01" in out

    def test_score_flip_text_and_flagged(self, capsys):
        code = main(["score", "HTTTTTTT", "--max-pattern-len", "3"])
        out = capsys.readouterr().out
        assert code == 0
        assert "+inf" in out
        code = main(["score", "Heads, Tails, Heads, Tails"])
        assert code == 0
        assert "randomness score" in capsys.readouterr().out

    def test_score_with_epsilon_orders_streak_below_irregular(self, capsys):
        main(["score", "01111111", "--epsilon", "0.05"])
        streak = capsys.readouterr().out
        main(["score", "11010010", "--epsilon", "0.05"])
        irregular = capsys.readouterr().out
        pick = lambda text: float(
            [line for line in text.splitlines() if "randomness score" in line][0]
            .split(":")[1]
            .replace("bits", "")
        )
        assert pick(streak) < pick(irregular)

    def test_generate_with_config_file(self, tmp_path, capsys):
        config = mock_config(WindowAverage(p=0.5, window=5), p_grid=(0.5,),
                             samples_per_cell=10, crop_len=10)
        config_path = tmp_path / "config.json"
        config_path.write_text(config.to_json())
        code = main(
            ["generate", "--config", str(config_path), "--out", str(tmp_path / "run")]
        )
        assert code == 0
        assert (tmp_path / "run" / "gambler_stats.csv").exists()
        assert "1 cells computed" in capsys.readouterr().out

    def test_provider_spec_overrides_config(self, tmp_path):
        config = mock_config(Bernoulli(p=0.5), p_grid=(0.3,), samples_per_cell=8,
                             crop_len=10)
        config_path = tmp_path / "config.json"
        config_path.write_text(config.to_json())
        code = main(
            [
                "generate",
                "--config",
                str(config_path),
                "--provider",
                "mock:window,p=0.5,w=5",
                "--out",
                str(tmp_path / "run"),
                "--seed",
                "3",
            ]
        )
        assert code == 0
        stored = json.loads((tmp_path / "run" / "config.json").read_text())
        assert stored["provider"]["model_id"].startswith("mock:window")
        assert stored["provider"]["mock_model"]["variant"] == "window_average"
        assert stored["seed"] == 3

    def test_judge_with_bayes_spec(self, tmp_path):
        config = mock_config(
            Bernoulli(p=0.5), kind="judgment", concepts=("011",), n_range=(1, 2)
        )
        config_path = tmp_path / "config.json"
        config_path.write_text(config.to_json())
        code = main(
            [
                "judge",
                "--config",
                str(config_path),
                "--provider",
                "bayes:max_len=3",
                "--out",
                str(tmp_path / "run"),
            ]
        )
        assert code == 0
        rows = read_csv(tmp_path / "run" / "judgment.csv")
        assert len(rows) == 3

    def test_report_command(self, tmp_path, capsys):
        config = mock_config(Bernoulli(p=0.5), p_grid=(0.5,), samples_per_cell=10)
        run_generation(config, tmp_path / "run")
        code = main(["report", str(tmp_path / "run")])
        assert code == 0
        assert "rebuilt tables" in capsys.readouterr().out

    def test_bad_provider_spec(self, tmp_path, capsys):
        code = main(["generate", "--provider", "nope:x", "--out", str(tmp_path / "o")])
        assert code == 1
        assert "error:" in capsys.readouterr().err

    def test_provider_required(self, tmp_path, capsys):
        code = main(["generate", "--out", str(tmp_path / "o")])
        assert code == 1
        assert "required" in capsys.readouterr().err

    def test_remote_spec_requires_remote_config(self, tmp_path, capsys):
        config = mock_config(Bernoulli(p=0.5))
        config_path = tmp_path / "config.json"
        config_path.write_text(config.to_json())
        code = main(
            [
                "generate",
                "--config",
                str(config_path),
                "--provider",
                "remote",
                "--out",
                str(tmp_path / "o"),
            ]
        )
        assert code == 1
        assert "remote" in capsys.readouterr().err
