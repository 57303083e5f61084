"""Complexity, memorization, and Gambler's-Fallacy metrics over sequence sets.

Aggregate metrics come with a Bernoulli baseline: the same metric computed on
seed-matched Bernoulli sets of equal shape, centered at the set's pooled
mean, averaged over a fixed number of replicates.  Reports are bitwise
reproducible for identical inputs because every baseline draw follows the
same derived-seed schedule.
"""

from __future__ import annotations

import gzip
from collections import Counter
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .models import SeededRng
from .sequences import BinarySequence

__all__ = [
    "SequenceSet",
    "MetricReport",
    "GamblerStats",
    "compressed_size",
    "compressed_size_report",
    "levenshtein",
    "mean_pairwise_levenshtein",
    "unique_subseq_count",
    "gambler_stats",
    "BASELINE_REPLICATES",
    "MAX_PAIRS",
]

BASELINE_REPLICATES = 20
MAX_PAIRS = 5000

MEAN_BIN_WIDTH = 0.02


@dataclass(frozen=True)
class SequenceSet:
    """A labelled collection of flip sequences, e.g. one generation-grid cell."""

    sequences: tuple
    label: str = ""
    declared_p: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "sequences", tuple(self.sequences))
        if not self.sequences:
            raise ValueError("sequence set must be non-empty")

    def __len__(self) -> int:
        return len(self.sequences)

    def lengths(self) -> list:
        return [len(s) for s in self.sequences]

    def pooled_mean(self) -> float:
        """Fraction of Tails across all flips of all sequences."""
        total = sum(self.lengths())
        if total == 0:
            raise ValueError("pooled mean undefined: set contains only empty sequences")
        return sum(sum(s) for s in self.sequences) / total


@dataclass(frozen=True)
class MetricReport:
    """A raw metric value next to its seed-matched Bernoulli baseline."""

    metric: str
    raw: float
    baseline: float
    ratio: Optional[float]
    label: str = ""
    declared_p: Optional[float] = None
    k: Optional[int] = None
    seed: int = 0

    CSV_HEADER = ("label", "declared_p", "metric", "k", "raw", "baseline", "ratio", "seed")

    def csv_row(self) -> tuple:
        return (
            self.label,
            "" if self.declared_p is None else self.declared_p,
            self.metric,
            "" if self.k is None else self.k,
            self.raw,
            self.baseline,
            "" if self.ratio is None else self.ratio,
            self.seed,
        )


def _report(metric, raw, baseline, sset, k, seed) -> MetricReport:
    ratio = raw / baseline if baseline > 0 else None
    return MetricReport(
        metric=metric,
        raw=raw,
        baseline=baseline,
        ratio=ratio,
        label=sset.label,
        declared_p=sset.declared_p,
        k=k,
        seed=seed,
    )


def _bernoulli_like(lengths: Sequence[int], p: float, seed: int) -> list:
    """Bernoulli(p) sequences matching a shape, as numpy int arrays."""
    gen = np.random.default_rng(seed)
    return [(gen.random(n) < p).astype(np.uint8) for n in lengths]


def _baseline_seed(seed: int, metric: str, replicate: int) -> int:
    return SeededRng.derive(seed, "baseline", metric, replicate)


# ---- compression ----------------------------------------------------------


def _joined_bits(sequences) -> bytes:
    return "\n".join(
        s.to_bits() if isinstance(s, BinarySequence) else "".join(map(str, s))
        for s in sequences
    ).encode("ascii")


def compressed_size(sset: SequenceSet) -> int:
    """Byte length of the gzip stream over all sequences as 0/1 text.

    Sequences are rendered compactly and joined by newlines, compressed at
    the maximum level with a zeroed header timestamp so identical input
    always yields identical bytes.
    """
    return len(gzip.compress(_joined_bits(sset.sequences), compresslevel=9, mtime=0))


def compressed_size_report(
    sset: SequenceSet,
    seed: int = 0,
    baseline_replicates: int = BASELINE_REPLICATES,
) -> MetricReport:
    """Compressed size with its shape- and mean-matched Bernoulli baseline."""
    raw = compressed_size(sset)
    lengths = sset.lengths()
    p = sset.pooled_mean()
    values = []
    for r in range(baseline_replicates):
        replicate = _bernoulli_like(lengths, p, _baseline_seed(seed, "gzip", r))
        values.append(
            len(gzip.compress(_joined_bits(replicate), compresslevel=9, mtime=0))
        )
    return _report("compressed_size", float(raw), float(np.mean(values)), sset, None, seed)


# ---- Levenshtein distance -------------------------------------------------


def levenshtein(a: BinarySequence, b: BinarySequence) -> int:
    """Minimal insert/delete/substitute edit count between two sequences."""
    xs, ys = tuple(a), tuple(b)
    if len(xs) < len(ys):
        xs, ys = ys, xs
    previous = list(range(len(ys) + 1))
    for i, x in enumerate(xs, start=1):
        current = [i]
        for j, y in enumerate(ys, start=1):
            current.append(
                min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + (x != y))
            )
        previous = current
    return previous[-1]


def _levenshtein_many(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-vectorized edit-distance DP over a batch of equal-shape pairs.

    a has shape (P, n) and b (P, m); returns the P distances.  The insertion
    recurrence new[j] = min(new[j-1] + 1, c[j]) unrolls to a prefix minimum
    of c[j] - j, which keeps every row update a pure vector operation.
    """
    pairs, n = a.shape
    m = b.shape[1]
    dtype = np.int16 if max(n, m) < 30000 else np.int32
    ar = np.arange(m + 1, dtype=dtype)
    old = np.broadcast_to(ar, (pairs, m + 1)).copy()
    c = np.empty((pairs, m + 1), dtype=dtype)
    for i in range(1, n + 1):
        cost = (a[:, i - 1 : i] != b).astype(dtype)
        c[:, 0] = i
        np.minimum(old[:, 1:] + 1, old[:, :-1] + cost, out=c[:, 1:])
        c -= ar
        np.minimum.accumulate(c, axis=1, out=c)
        old = c + ar
    return old[:, -1].astype(np.int64)


def _pair_indices(n_seqs: int, max_pairs: int, seed: int):
    """All unordered pair indices, or a seeded uniform subsample of max_pairs."""
    i_idx, j_idx = np.triu_indices(n_seqs, k=1)
    total = i_idx.size
    if total > max_pairs:
        gen = np.random.default_rng(SeededRng.derive(seed, "lev-pairs"))
        pick = np.sort(gen.choice(total, size=max_pairs, replace=False))
        i_idx, j_idx = i_idx[pick], j_idx[pick]
    return i_idx, j_idx


def _as_matrix(sequences) -> Optional[np.ndarray]:
    lengths = {len(s) for s in sequences}
    if len(lengths) != 1:
        return None
    return np.array([tuple(s) for s in sequences], dtype=np.uint8)


def _mean_pairwise(sequences, i_idx, j_idx) -> float:
    mat = _as_matrix(sequences)
    if mat is not None:
        return float(_levenshtein_many(mat[i_idx], mat[j_idx]).mean())
    seqs = [BinarySequence(s) for s in sequences]
    return float(
        np.mean([levenshtein(seqs[i], seqs[j]) for i, j in zip(i_idx, j_idx)])
    )


def mean_pairwise_levenshtein(
    sset: SequenceSet,
    max_pairs: int = MAX_PAIRS,
    seed: int = 0,
    baseline_replicates: int = BASELINE_REPLICATES,
) -> MetricReport:
    """Mean edit distance over sequence pairs, with Bernoulli baseline.

    When the pair count exceeds max_pairs a seeded uniform subsample is used;
    the baseline replicates reuse the identical pair subsample so raw and
    baseline estimate the same functional.
    """
    if len(sset) < 2:
        raise ValueError("need at least 2 sequences for pairwise distances")
    i_idx, j_idx = _pair_indices(len(sset), max_pairs, seed)
    lengths = sset.lengths()
    p = sset.pooled_mean()

    mat = _as_matrix(sset.sequences)
    if mat is not None:
        # Uniform lengths: batch the raw set and every replicate in one DP.
        stacks = [mat]
        for r in range(baseline_replicates):
            replicate = _bernoulli_like(lengths, p, _baseline_seed(seed, "lev", r))
            stacks.append(np.array(replicate, dtype=np.uint8))
        a = np.concatenate([s[i_idx] for s in stacks])
        b = np.concatenate([s[j_idx] for s in stacks])
        dists = _levenshtein_many(a, b).reshape(len(stacks), i_idx.size)
        raw = float(dists[0].mean())
        baseline = float(dists[1:].mean(axis=1).mean()) if baseline_replicates else 0.0
    else:
        raw = _mean_pairwise(sset.sequences, i_idx, j_idx)
        values = []
        for r in range(baseline_replicates):
            replicate = _bernoulli_like(lengths, p, _baseline_seed(seed, "lev", r))
            values.append(_mean_pairwise(replicate, i_idx, j_idx))
        baseline = float(np.mean(values)) if values else 0.0
    return _report("mean_pairwise_levenshtein", raw, baseline, sset, None, seed)


# ---- sub-sequence census --------------------------------------------------


def _distinct_windows(sequences, k: int) -> int:
    ids = []
    powers = 1 << np.arange(k - 1, -1, -1, dtype=np.int64)
    for s in sequences:
        arr = np.asarray(tuple(s) if isinstance(s, BinarySequence) else s, dtype=np.int64)
        if arr.size < k:
            raise ValueError(f"sequence of length {arr.size} shorter than window {k}")
        windows = np.lib.stride_tricks.sliding_window_view(arr, k)
        ids.append(windows @ powers)
    return int(np.unique(np.concatenate(ids)).size)


def unique_subseq_count(
    sset: SequenceSet,
    k: int,
    seed: int = 0,
    baseline_replicates: int = BASELINE_REPLICATES,
) -> MetricReport:
    """Number of distinct length-k windows across the set, with baseline."""
    if k < 1:
        raise ValueError("k must be >= 1")
    raw = _distinct_windows(sset.sequences, k)
    lengths = sset.lengths()
    p = sset.pooled_mean()
    values = []
    for r in range(baseline_replicates):
        replicate = _bernoulli_like(lengths, p, _baseline_seed(seed, "subseq", r))
        values.append(_distinct_windows(replicate, k))
    baseline = float(np.mean(values)) if values else 0.0
    return _report("unique_subseq_count", float(raw), baseline, sset, k, seed)


# ---- Gambler's-Fallacy diagnostics ----------------------------------------


@dataclass(frozen=True)
class GamblerStats:
    """Per-set histograms and rates for run-avoidance analysis."""

    mean_hist: tuple          # 50 counts over [0, 1] in 0.02-wide bins
    mean_bin_edges: tuple     # 51 edges, 0.00 .. 1.00
    longest_run_hist: dict    # run length -> count of sequences
    mean_of_means: float
    mean_longest_run: float
    mean_alternation_rate: float

    def run_mass_at_least(self, threshold: int) -> float:
        """Fraction of sequences whose longest run reaches the threshold."""
        total = sum(self.longest_run_hist.values())
        hit = sum(c for run, c in self.longest_run_hist.items() if run >= threshold)
        return hit / total


def gambler_stats(sset: SequenceSet) -> GamblerStats:
    """Histogram of sequence means and longest runs, plus mean alternation."""
    for s in sset.sequences:
        if len(s) < 2:
            raise ValueError("gambler stats need sequences of length >= 2")
    means = [s.mean() for s in sset.sequences]
    runs = [s.longest_run() for s in sset.sequences]
    alts = [s.alternation_rate() for s in sset.sequences]
    edges = np.linspace(0.0, 1.0, int(round(1.0 / MEAN_BIN_WIDTH)) + 1)
    hist, _ = np.histogram(means, bins=edges)
    return GamblerStats(
        mean_hist=tuple(int(c) for c in hist),
        mean_bin_edges=tuple(float(e) for e in edges),
        longest_run_hist=dict(sorted(Counter(runs).items())),
        mean_of_means=float(np.mean(means)),
        mean_longest_run=float(np.mean(runs)),
        mean_alternation_rate=float(np.mean(alts)),
    )
