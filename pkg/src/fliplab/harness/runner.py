"""Batch runner: fan experiment cells out to a worker pool, persist, resume.

Each grid cell is computed independently, written atomically to its own
record file, and keyed by the config digest.  Killing a run and restarting
with resume recomputes only missing cells, and because every cell derives
its seeds from (config seed, cell coordinates), the final outputs are
byte-identical to an uninterrupted run.
"""

from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from ..llm.config import ProviderConfig
from ..llm.prompts import (
    chat_wrap,
    generation_prompt_text,
    judgment_messages,
    judgment_prompt_text,
)
from ..llm.providers import MissingTokenError, Provider, binary_next_prob, sample_next_prob
from ..llm.remote import build_provider
from ..metrics import (
    GamblerStats,
    SequenceSet,
    compressed_size_report,
    gambler_stats,
    mean_pairwise_levenshtein,
    unique_subseq_count,
)
from ..models import SeededRng
from ..sequences import DEFAULT_FORMAT, BinarySequence, parse_flips
from ..trees import Concept, PartialTreeError, build_tree, concept_mass, tree_to_dict
from .config import ExperimentConfig
from . import report as report_mod

__all__ = [
    "RunError",
    "RunSummary",
    "run_generation",
    "run_judgment",
    "run_learning_curve",
]

log = logging.getLogger("fliplab")


class RunError(RuntimeError):
    """Run-level failure: bad run directory, mismatched config, etc."""


@dataclass
class RunSummary:
    kind: str
    out_dir: Path
    total_cells: int
    completed: int
    skipped: int
    failed: list = field(default_factory=list)
    gaps: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failed


def _atomic_write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")
    os.replace(tmp, path)


def _gambler_dict(stats: GamblerStats) -> dict:
    return {
        "mean_hist": list(stats.mean_hist),
        "mean_bin_edges": list(stats.mean_bin_edges),
        "longest_run_hist": {str(run): count for run, count in stats.longest_run_hist.items()},
        "mean_of_means": stats.mean_of_means,
        "mean_longest_run": stats.mean_longest_run,
        "mean_alternation_rate": stats.mean_alternation_rate,
    }


def _metric_dict(rep) -> dict:
    return {
        "label": rep.label,
        "declared_p": rep.declared_p,
        "metric": rep.metric,
        "k": rep.k,
        "raw": rep.raw,
        "baseline": rep.baseline,
        "ratio": rep.ratio,
        "seed": rep.seed,
    }


def _prepare(config: ExperimentConfig, out_dir: Path, provider: Optional[Provider]):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "cells").mkdir(exist_ok=True)
    config_path = out / "config.json"
    if config_path.exists():
        existing = ExperimentConfig.from_json_file(config_path)
        if existing.digest() != config.digest():
            raise RunError(
                f"{out} already holds a run with a different config "
                f"({existing.digest()} != {config.digest()})"
            )
    else:
        tmp = config_path.with_name(config_path.name + ".tmp")
        tmp.write_text(config.to_json(), encoding="utf-8")
        os.replace(tmp, config_path)
    if provider is None:
        cache = Path(config.cache_dir) if config.cache_dir else out / "cache"
        provider = build_provider(config.provider, cache_dir=cache, seed=config.seed)
    return out, provider


def _run_cells(
    config: ExperimentConfig,
    out: Path,
    resume: bool,
    cells: list,
) -> RunSummary:
    """Execute (cell_id, thunk) pairs on a bounded pool with resume support."""
    digest = config.digest()
    pending = []
    skipped = 0
    for cell_id, thunk in cells:
        path = out / "cells" / f"{cell_id}.json"
        if path.exists():
            existing = json.loads(path.read_text(encoding="utf-8"))
            if existing.get("config_digest") != digest:
                raise RunError(f"cell {cell_id} comes from a different config; use a fresh --out")
            if not resume:
                raise RunError(
                    f"cell {cell_id} already exists; pass resume=True or use a fresh --out"
                )
            skipped += 1
            continue
        pending.append((cell_id, thunk))

    failed = []
    workers = config.provider.rate_limit.max_in_flight
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {pool.submit(thunk): cell_id for cell_id, thunk in pending}
        for future in as_completed(futures):
            cell_id = futures[future]
            try:
                future.result()
                log.info("cell %s done", cell_id)
            except Exception as exc:  # cell failures are logged and skipped
                log.warning("cell %s failed: %s", cell_id, exc)
                failed.append({"cell": cell_id, "error": f"{type(exc).__name__}: {exc}"})
    failed.sort(key=lambda f: f["cell"])
    return RunSummary(
        kind=config.kind,
        out_dir=out,
        total_cells=len(cells),
        completed=len(pending) - len(failed),
        skipped=skipped,
        failed=failed,
    )


def _finish(summary: RunSummary, out: Path) -> RunSummary:
    summary.gaps = report_mod.build_outputs(out)
    _atomic_write_json(
        out / "summary.json",
        {
            "kind": summary.kind,
            "total_cells": summary.total_cells,
            "completed": summary.completed,
            "skipped": summary.skipped,
            "failed": summary.failed,
            "gaps": summary.gaps,
        },
    )
    return summary


# ---- generation -------------------------------------------------------------


def _generation_prompt(provider_config: ProviderConfig, p: float, seed_flips, fmt):
    if provider_config.kind == "remote_chat":
        return chat_wrap(p, seed_flips, fmt)
    return generation_prompt_text(p, seed_flips, fmt)


def _generation_cell(
    config: ExperimentConfig, provider: Provider, out: Path, index: int, p: float
) -> None:
    fmt = DEFAULT_FORMAT
    seed_flips = BinarySequence((0,))  # initial Heads so flips format consistently
    prompt = _generation_prompt(config.provider, p, seed_flips, fmt)
    cell_seed = SeededRng.derive(config.seed, "gen", index)
    records = provider.complete(
        prompt,
        n=config.samples_per_cell,
        max_tokens=config.provider.max_tokens,
        seed=cell_seed,
    )
    rows = []
    kept = []
    for sample, record in enumerate(records):
        parsed = parse_flips(record.response_text, fmt)
        cropped = parsed.sequence[: config.crop_len]
        flagged = len(cropped) < config.min_flips
        rows.append(
            {
                "sample": sample,
                "request_hash": record.request_hash,
                "bits": cropped.to_bits(),
                "parsed_len": len(parsed.sequence),
                "skipped": parsed.skipped,
                "flagged": flagged,
            }
        )
        if not flagged:
            kept.append(cropped)
    derived: dict = {"n_sequences": len(kept), "n_flagged": len(rows) - len(kept)}
    metric_rows: list = []
    metric_gaps: list = []
    if len(kept) >= 2:
        sset = SequenceSet(kept, label=f"p={p:g}", declared_p=p)
        metric_seed = SeededRng.derive(config.seed, "metrics", index)
        derived["gambler"] = _gambler_dict(gambler_stats(sset))
        for k in config.subseq_ks:
            try:
                metric_rows.append(_metric_dict(unique_subseq_count(sset, k, seed=metric_seed)))
            except ValueError as exc:
                metric_gaps.append({"metric": "unique_subseq_count", "k": k, "error": str(exc)})
        metric_rows.append(_metric_dict(compressed_size_report(sset, seed=metric_seed)))
        metric_rows.append(_metric_dict(mean_pairwise_levenshtein(sset, seed=metric_seed)))
    else:
        metric_gaps.append({"metric": "all", "error": "fewer than 2 parseable sequences"})
    derived["metrics"] = metric_rows
    derived["metric_gaps"] = metric_gaps
    _atomic_write_json(
        out / "cells" / f"gen-{index:02d}.json",
        {
            "config_digest": config.digest(),
            "cell": {"kind": "generation", "index": index, "p": p},
            "records": rows,
            "derived": derived,
        },
    )


def run_generation(
    config: ExperimentConfig,
    out_dir: Path,
    resume: bool = False,
    provider: Optional[Provider] = None,
) -> RunSummary:
    """Generation protocol over the P(Tails) grid; emits gambler and complexity stats."""
    config = config.with_kind("generation")
    out, provider = _prepare(config, out_dir, provider)
    cells = [
        (
            f"gen-{i:02d}",
            (lambda i=i, p=p: _generation_cell(config, provider, out, i, p)),
        )
        for i, p in enumerate(config.p_grid)
    ]
    return _finish(_run_cells(config, out, resume, cells), out)


# ---- judgment ---------------------------------------------------------------


def _judgment_cell(
    config: ExperimentConfig, provider: Provider, out: Path, concept: str, n: int
) -> None:
    fmt = DEFAULT_FORMAT
    x = BinarySequence.from_bits(concept) * n
    if config.provider.kind == "remote_chat":
        prompt = judgment_messages(x, fmt)
    else:
        prompt = judgment_prompt_text(x, fmt)
    try:
        p_random = binary_next_prob(provider, prompt, "Non", "Random")
        method, flagged = "logprobs", False
    except MissingTokenError:
        p_random = sample_next_prob(
            provider,
            prompt,
            "Non",
            "Random",
            n=config.samples_per_cell,
            seed=SeededRng.derive(config.seed, "judge", concept, n),
        )
        method, flagged = "sampled", True
    _atomic_write_json(
        out / "cells" / f"jud-{concept}-n{n:02d}.json",
        {
            "config_digest": config.digest(),
            "cell": {"kind": "judgment", "concept": concept, "n": n},
            "row": {
                "concept": concept,
                "n": n,
                "x_len": len(x),
                "p_random": p_random,
                "method": method,
                "flagged": flagged,
            },
        },
    )


def run_judgment(
    config: ExperimentConfig,
    out_dir: Path,
    resume: bool = False,
    provider: Optional[Provider] = None,
) -> RunSummary:
    """Judgment protocol: p(Random) readout per concept and repetition count."""
    config = config.with_kind("judgment")
    out, provider = _prepare(config, out_dir, provider)
    cells = [
        (
            f"jud-{concept}-n{n:02d}",
            (lambda c=concept, n=n: _judgment_cell(config, provider, out, c, n)),
        )
        for concept in config.concepts
        for n in config.n_range
    ]
    return _finish(_run_cells(config, out, resume, cells), out)


# ---- learning curves ----------------------------------------------------------


def _curve_cell(
    config: ExperimentConfig, provider: Provider, out: Path, concept: str, n: int, depth: int
) -> None:
    fmt = DEFAULT_FORMAT
    pattern = BinarySequence.from_bits(concept)
    context = pattern * n

    def flip_provider(ctx: BinarySequence) -> float:
        prompt = _generation_prompt(config.provider, config.tree_p, ctx, fmt)
        return binary_next_prob(provider, prompt, fmt.heads_token, fmt.tails_token)

    cell_id = f"cur-{concept}-n{n:02d}-d{depth}"
    try:
        tree = build_tree(flip_provider, context, depth)
    except PartialTreeError as exc:
        # Cell stays incomplete; a resumed run rebuilds it (cache-served).
        raise RunError(
            f"tree incomplete at {len(exc.completed)} of {2 ** depth - 1} nodes: {exc}"
        ) from exc
    concept_obj = Concept(pattern)
    mass = concept_mass(tree, concept_obj)
    _atomic_write_json(out / "trees" / f"{cell_id}.json", tree_to_dict(tree))
    report_mod.write_tree_csv(out / "trees" / f"{cell_id}.csv", tree, concept_obj)
    _atomic_write_json(
        out / "cells" / f"{cell_id}.json",
        {
            "config_digest": config.digest(),
            "cell": {"kind": "learning_curve", "concept": concept, "n": n, "d": depth},
            "row": {
                "concept": concept,
                "n": n,
                "x_len": len(context),
                "d": depth,
                "mass": mass,
            },
        },
    )


def run_learning_curve(
    config: ExperimentConfig,
    out_dir: Path,
    resume: bool = False,
    provider: Optional[Provider] = None,
) -> RunSummary:
    """Formal-language learning: concept mass per (concept, n, depth) cell."""
    config = config.with_kind("learning_curve")
    out, provider = _prepare(config, out_dir, provider)
    cells = [
        (
            f"cur-{concept}-n{n:02d}-d{depth}",
            (lambda c=concept, n=n, d=depth: _curve_cell(config, provider, out, c, n, d)),
        )
        for concept in config.concepts
        for n in config.n_range
        for depth in config.depth_list
    ]
    return _finish(_run_cells(config, out, resume, cells), out)
