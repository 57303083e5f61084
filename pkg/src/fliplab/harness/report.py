"""Summary tables and plot data rebuilt from persisted run records.

Every table row traces back to a cell record file; cells that are missing or
failed show up as reported gaps and are never interpolated.
"""

from __future__ import annotations

import csv
import json
import os
from pathlib import Path

from ..sequences import BinarySequence
from ..trees import tree_csv_rows
from .config import ExperimentConfig

__all__ = ["report", "build_outputs", "write_tree_csv"]

JUDGMENT_COLUMNS = ("concept", "n", "x_len", "p_random", "method", "flagged")
CURVE_COLUMNS = ("concept", "n", "x_len", "d", "mass")
GAMBLER_COLUMNS = (
    "p",
    "n_sequences",
    "n_flagged",
    "mean_of_means",
    "mean_longest_run",
    "mean_alternation_rate",
)
COMPLEXITY_COLUMNS = ("label", "declared_p", "metric", "k", "raw", "baseline", "ratio", "seed")


def _write_csv(path: Path, header, rows) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    os.replace(tmp, path)


def write_tree_csv(path: Path, tree, concept) -> None:
    """Companion flat file for one prediction tree: path, probability, flag."""
    rows = [
        (bits, prob, int(in_concept))
        for bits, prob, in_concept in tree_csv_rows(tree, concept)
    ]
    path.parent.mkdir(parents=True, exist_ok=True)
    _write_csv(path, ("path", "probability", "in_concept"), rows)


def _load_cell(out: Path, cell_id: str):
    path = out / "cells" / f"{cell_id}.json"
    if not path.exists():
        return None
    return json.loads(path.read_text(encoding="utf-8"))


def _write_record_store(out: Path, entries: list) -> None:
    """Consolidated JSONL record store: one line per persisted record."""
    tmp = out / "records.jsonl.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        for entry in entries:
            fh.write(json.dumps(entry, sort_keys=True) + "\n")
    os.replace(tmp, out / "records.jsonl")


def _generation_outputs(out: Path, config: ExperimentConfig) -> list:
    gaps = []
    gambler_rows = []
    complexity_rows = []
    mean_hist_rows = []
    run_hist_rows = []
    running_rows = []
    store = []
    for index, p in enumerate(config.p_grid):
        cell = _load_cell(out, f"gen-{index:02d}")
        if cell is None:
            gaps.append({"cell": f"gen-{index:02d}", "reason": "missing"})
            continue
        for record in cell["records"]:
            store.append(
                {"config_digest": cell["config_digest"], "cell": cell["cell"], **record}
            )
        derived = cell["derived"]
        for gap in derived.get("metric_gaps", []):
            gaps.append({"cell": f"gen-{index:02d}", **gap})
        gambler = derived.get("gambler")
        if gambler is None:
            continue
        gambler_rows.append(
            (
                p,
                derived["n_sequences"],
                derived["n_flagged"],
                gambler["mean_of_means"],
                gambler["mean_longest_run"],
                gambler["mean_alternation_rate"],
            )
        )
        for metric in derived["metrics"]:
            complexity_rows.append(
                (
                    metric["label"],
                    metric["declared_p"],
                    metric["metric"],
                    "" if metric["k"] is None else metric["k"],
                    metric["raw"],
                    metric["baseline"],
                    "" if metric["ratio"] is None else metric["ratio"],
                    metric["seed"],
                )
            )
        edges = gambler["mean_bin_edges"]
        for b, count in enumerate(gambler["mean_hist"]):
            mean_hist_rows.append((p, edges[b], edges[b + 1], count))
        for run, count in sorted(
            (int(r), c) for r, c in gambler["longest_run_hist"].items()
        ):
            run_hist_rows.append((p, run, count))
        for record in cell["records"]:
            if record["flagged"]:
                continue
            seq = BinarySequence.from_bits(record["bits"])
            for t, value in enumerate(seq.running_mean()):
                running_rows.append((p, record["sample"], t, value))
    _write_csv(out / "gambler_stats.csv", GAMBLER_COLUMNS, gambler_rows)
    _write_csv(out / "complexity.csv", COMPLEXITY_COLUMNS, complexity_rows)
    _write_csv(out / "hist_means.csv", ("p", "bin_left", "bin_right", "count"), mean_hist_rows)
    _write_csv(out / "hist_runs.csv", ("p", "longest_run", "count"), run_hist_rows)
    _write_csv(out / "running_means.csv", ("p", "sample", "t", "value"), running_rows)
    _write_record_store(out, store)
    return gaps


def _judgment_outputs(out: Path, config: ExperimentConfig) -> list:
    gaps = []
    rows = []
    store = []
    for concept in config.concepts:
        for n in config.n_range:
            cell = _load_cell(out, f"jud-{concept}-n{n:02d}")
            if cell is None:
                gaps.append({"cell": f"jud-{concept}-n{n:02d}", "reason": "missing"})
                continue
            row = cell["row"]
            rows.append(tuple(row[c] for c in JUDGMENT_COLUMNS))
            store.append(
                {"config_digest": cell["config_digest"], "cell": cell["cell"], **row}
            )
    _write_csv(out / "judgment.csv", JUDGMENT_COLUMNS, rows)
    _write_record_store(out, store)
    return gaps


def _curve_outputs(out: Path, config: ExperimentConfig) -> list:
    gaps = []
    rows = []
    store = []
    for concept in config.concepts:
        for n in config.n_range:
            for depth in config.depth_list:
                cell = _load_cell(out, f"cur-{concept}-n{n:02d}-d{depth}")
                if cell is None:
                    gaps.append(
                        {"cell": f"cur-{concept}-n{n:02d}-d{depth}", "reason": "missing"}
                    )
                    continue
                row = cell["row"]
                rows.append(tuple(row[c] for c in CURVE_COLUMNS))
                store.append(
                    {"config_digest": cell["config_digest"], "cell": cell["cell"], **row}
                )
    _write_csv(out / "curves.csv", CURVE_COLUMNS, rows)
    _write_record_store(out, store)
    return gaps


def build_outputs(out_dir: Path) -> list:
    """Rebuild all tables for a run directory; returns the list of gaps."""
    out = Path(out_dir)
    config = ExperimentConfig.from_json_file(out / "config.json")
    if config.kind == "generation":
        return _generation_outputs(out, config)
    if config.kind == "judgment":
        return _judgment_outputs(out, config)
    return _curve_outputs(out, config)


def report(run_dir: Path) -> dict:
    """Regenerate summary tables and plot data from a run's record files."""
    out = Path(run_dir)
    if not (out / "config.json").exists():
        raise FileNotFoundError(f"{out} has no config.json; not a run directory")
    config = ExperimentConfig.from_json_file(out / "config.json")
    gaps = build_outputs(out)
    return {"kind": config.kind, "out_dir": str(out), "gaps": gaps}
