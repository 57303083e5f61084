"""Command-line surface for running experiments and scoring sequences.

Subcommands: generate, judge, curve, report, score.  The provider comes from
a config file or a compact --provider spec; environment variables override
only the endpoint URL (FLIPLAB_ENDPOINT_URL) and the API key (by the name
the config points at).
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from pathlib import Path

from ..bayes import enumerate_repeaters, randomness_score
from ..llm.config import ProviderConfig
from ..llm.providers import BayesProvider, ConstantJudgeProvider, MockFlipProvider, Provider
from ..models import model_from_string
from ..sequences import BinarySequence, parse_flips
from .config import ExperimentConfig
from .report import report
from .runner import RunError, run_generation, run_judgment, run_learning_curve

__all__ = ["main"]

_RUNNERS = {
    "generate": ("generation", run_generation),
    "judge": ("judgment", run_judgment),
    "curve": ("learning_curve", run_learning_curve),
}


def _parse_sequence_arg(text: str) -> BinarySequence:
    """Accept '0110', 'HTTH', or 'Heads, Tails, ...' spellings."""
    stripped = text.strip()
    if stripped and all(c in "01" for c in stripped):
        return BinarySequence.from_bits(stripped)
    if stripped and all(c in "htHT" for c in stripped):
        return BinarySequence(0 if c in "hH" else 1 for c in stripped)
    sequence = parse_flips(stripped).sequence
    if len(sequence) == 0:
        raise ValueError(f"could not parse any flips from {text!r}")
    return sequence


def _provider_from_spec(spec: str, seed: int):
    """Resolve a --provider spec into (ProviderConfig, Provider or None)."""
    if spec == "remote":
        return None, None  # use the config file's remote provider
    if spec.startswith("mock:"):
        model = model_from_string(spec[len("mock:") :])
        config = ProviderConfig(kind="mock", model_id=spec, mock_model=model)
        return config, MockFlipProvider(model, seed=seed)
    if spec.startswith("bayes:"):
        options = dict(
            part.split("=", 1) for part in spec[len("bayes:") :].split(",") if part
        )
        space = enumerate_repeaters(
            int(options.get("max_len", 3)), float(options.get("epsilon", 0.0))
        )
        provider = BayesProvider(space, mode=options.get("mode", "marginalize"), seed=seed)
        return ProviderConfig(kind="mock", model_id=spec), provider
    if spec.startswith("constant:"):
        options = dict(
            part.split("=", 1) for part in spec[len("constant:") :].split(",") if part
        )
        provider = ConstantJudgeProvider(float(options.get("p_random", 1.0)), seed=seed)
        return ProviderConfig(kind="mock", model_id=spec), provider
    raise ValueError(
        f"unknown provider spec {spec!r}; expected remote, mock:<modelspec>, "
        "bayes:<opts>, or constant:<opts>"
    )


def _resolve(args, kind: str):
    """Build the experiment config and provider for a run subcommand."""
    if args.config:
        config = ExperimentConfig.from_json_file(args.config).with_kind(kind)
    elif args.provider:
        config = ExperimentConfig(kind=kind, provider=ProviderConfig(kind="mock"))
    else:
        raise ValueError("either --config or --provider is required")
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)

    provider: Provider | None = None
    if args.provider:
        provider_config, provider = _provider_from_spec(args.provider, config.seed)
        if provider_config is not None:
            config = dataclasses.replace(config, provider=provider_config)
        elif not config.provider.is_remote:
            raise ValueError(
                "--provider remote needs a config file with a remote provider"
            )
    if config.provider.is_remote:
        endpoint = os.environ.get("FLIPLAB_ENDPOINT_URL")
        if endpoint:
            config = dataclasses.replace(
                config, provider=dataclasses.replace(config.provider, endpoint_url=endpoint)
            )
    if config.provider.kind == "mock" and config.provider.mock_model is None and provider is None:
        raise ValueError("mock provider config has no model; pass --provider mock:<modelspec>")
    return config, provider


def _cmd_run(args) -> int:
    kind, runner = _RUNNERS[args.command]
    config, provider = _resolve(args, kind)
    summary = runner(config, args.out, resume=args.resume, provider=provider)
    print(
        f"{args.command}: {summary.completed} cells computed, "
        f"{summary.skipped} resumed, {len(summary.failed)} failed -> {summary.out_dir}"
    )
    for failure in summary.failed:
        print(f"  failed {failure['cell']}: {failure['error']}", file=sys.stderr)
    for gap in summary.gaps:
        print(f"  gap: {gap}", file=sys.stderr)
    return 0 if summary.ok else 1


def _cmd_report(args) -> int:
    outcome = report(args.run_dir)
    print(f"report: rebuilt tables for {outcome['kind']} run at {outcome['out_dir']}")
    for gap in outcome["gaps"]:
        print(f"  gap: {gap}", file=sys.stderr)
    return 0


def _cmd_score(args) -> int:
    sequence = _parse_sequence_arg(args.sequence)
    space = enumerate_repeaters(args.max_pattern_len, args.epsilon)
    score = randomness_score(sequence, space)
    print(f"sequence        : {sequence.to_bits()} (length {len(sequence)})")
    if score.flagged:
        print("randomness score: +inf bits (no non-random hypothesis fits; flagged)")
    else:
        print(f"randomness score: {score.bits:+.6f} bits")
        model = space.hypotheses[score.map_index].model
        print(f"map hypothesis  : {model.label()}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fliplab",
        description="Randomness generation/judgment experiments and sequence scoring.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("generate", "run the generation protocol over the P(Tails) grid"),
        ("judge", "run the judgment protocol over concepts and context lengths"),
        ("curve", "run formal-language learning curves via prediction trees"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", type=Path, help="experiment config JSON")
        p.add_argument("--out", type=Path, required=True, help="run output directory")
        p.add_argument(
            "--provider",
            help="provider spec: remote | mock:<modelspec> | bayes:<opts> | constant:<opts>",
        )
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--resume", action="store_true", help="skip completed cells")
        p.set_defaults(func=_cmd_run)

    p = sub.add_parser("report", help="rebuild summary tables from a run directory")
    p.add_argument("run_dir", type=Path)
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("score", help="one-shot randomness score of a sequence")
    p.add_argument("sequence", help="flips as 0/1, H/T, or 'Heads, Tails, ...' text")
    p.add_argument("--max-pattern-len", type=int, default=3)
    p.add_argument("--epsilon", type=float, default=0.0)
    p.set_defaults(func=_cmd_score)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, RunError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
