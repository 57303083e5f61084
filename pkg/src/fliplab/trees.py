"""Next-token prediction trees and cyclic-concept probability mass.

A prediction tree enumerates every binary continuation of a context up to a
depth d: edges carry next-flip probabilities from an arbitrary provider and
each leaf path is one candidate continuation.  Concept mass is the total
probability of the paths that keep repeating a cyclic pattern, at any phase.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

from .sequences import BinarySequence, is_primitive

__all__ = [
    "NextTokenProvider",
    "Concept",
    "PredictionTree",
    "PartialTreeError",
    "PartialCurveError",
    "build_tree",
    "concept_paths",
    "concept_mass",
    "learning_curve",
    "tree_to_dict",
    "tree_from_dict",
    "tree_csv_rows",
    "MAX_DEPTH",
]

# A provider maps a full context (root context plus the path walked so far)
# to the probability that the next flip is Tails.
NextTokenProvider = Callable[[BinarySequence], float]

MAX_DEPTH = 8  # a depth-d build costs 2^d - 1 provider calls


class PartialTreeError(RuntimeError):
    """Provider failure mid-build; carries the completed edges for resuming."""

    def __init__(self, message: str, completed: dict, failed_path: BinarySequence):
        super().__init__(message)
        self.completed = completed
        self.failed_path = failed_path


class PartialCurveError(RuntimeError):
    """Tree build failure mid-curve; carries the finished (|x|, mass) points."""

    def __init__(self, message: str, points: list, failure: PartialTreeError):
        super().__init__(message)
        self.points = points
        self.failure = failure


@dataclass(frozen=True)
class Concept:
    """A primitive cyclic pattern; continuations may start at any phase."""

    pattern: BinarySequence

    def __post_init__(self):
        if not isinstance(self.pattern, BinarySequence):
            object.__setattr__(self, "pattern", BinarySequence(self.pattern))
        if len(self.pattern) == 0:
            raise ValueError("concept pattern must be non-empty")
        if not is_primitive(self.pattern):
            raise ValueError(
                f"concept pattern {self.pattern.to_bits()!r} repeats a shorter pattern"
            )


@dataclass(frozen=True)
class PredictionTree:
    """Complete depth-d binary tree of next-flip probabilities.

    edge_probs maps each internal node, identified by the path walked from
    the root (length < depth), to the probability of its Tails edge.
    """

    depth: int
    root_context: BinarySequence
    edge_probs: Mapping

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        expected = 2 ** self.depth - 1
        if len(self.edge_probs) != expected:
            raise ValueError(
                f"expected {expected} edge probabilities for depth {self.depth}, "
                f"got {len(self.edge_probs)}"
            )
        for path, p in self.edge_probs.items():
            if len(path) >= self.depth:
                raise ValueError(f"path {path.to_bits()!r} too long for depth {self.depth}")
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"edge probability {p} out of [0, 1]")

    def path_probability(self, path: BinarySequence) -> float:
        """Product of edge probabilities along a root-to-node path."""
        if len(path) > self.depth:
            raise ValueError(f"path longer than tree depth {self.depth}")
        prob = 1.0
        for t, flip in enumerate(path):
            p_tails = self.edge_probs[path[:t]]
            prob *= p_tails if flip == 1 else 1.0 - p_tails
        return prob

    def leaf_probabilities(self) -> dict:
        """Probability of every depth-d leaf path, keyed by the path."""
        probs = {BinarySequence(): 1.0}
        for _ in range(self.depth):
            nxt = {}
            for path, prob in probs.items():
                p_tails = self.edge_probs[path]
                nxt[path + BinarySequence((0,))] = prob * (1.0 - p_tails)
                nxt[path + BinarySequence((1,))] = prob * p_tails
            probs = nxt
        return probs


def build_tree(
    provider: NextTokenProvider,
    context: BinarySequence,
    depth: int,
    resume_from: Mapping | None = None,
) -> PredictionTree:
    """Evaluate the provider at every node of the complete depth-d tree.

    Exactly 2^d - 1 provider calls for a fresh build, one per internal node,
    in breadth-first order.  If the provider raises, the completed edges are
    attached to the error so a later call can resume via `resume_from`.
    """
    if not 1 <= depth <= MAX_DEPTH:
        raise ValueError(f"depth must be in [1, {MAX_DEPTH}]")
    edges: dict = dict(resume_from) if resume_from else {}
    for level in range(depth):
        for node in range(2**level):
            path = BinarySequence((node >> (level - 1 - i)) & 1 for i in range(level))
            if path in edges:
                continue
            try:
                p = float(provider(context + path))
            except Exception as exc:
                raise PartialTreeError(
                    f"provider failed at path {path.to_bits()!r}: {exc}",
                    completed=edges,
                    failed_path=path,
                ) from exc
            if not 0.0 <= p <= 1.0:
                raise PartialTreeError(
                    f"provider returned {p} outside [0, 1] at path {path.to_bits()!r}",
                    completed=edges,
                    failed_path=path,
                )
            edges[path] = p
    return PredictionTree(depth=depth, root_context=context, edge_probs=edges)


def concept_paths(concept: Concept, depth: int) -> set:
    """All depth-d prefixes of the concept's infinite repetition, one per phase."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    pattern = tuple(concept.pattern)
    length = len(pattern)
    return {
        BinarySequence(pattern[(r + t) % length] for t in range(depth))
        for r in range(length)
    }


def concept_mass(tree: PredictionTree, concept: Concept) -> float:
    """Total probability the tree assigns to continuations matching the concept."""
    return sum(tree.path_probability(path) for path in concept_paths(concept, tree.depth))


def learning_curve(
    provider: NextTokenProvider,
    concept: Concept,
    n_range: Sequence[int],
    depth: int,
) -> list:
    """Concept mass at depth d as the context grows to n pattern repetitions.

    Returns (|x|, mass) pairs for each n in ascending n_range, with the
    context equal to the pattern repeated n times.
    """
    if not n_range or list(n_range) != sorted(n_range):
        raise ValueError("n_range must be non-empty and ascending")
    points = []
    for n in n_range:
        context = concept.pattern * n
        try:
            tree = build_tree(provider, context, depth)
        except PartialTreeError as exc:
            raise PartialCurveError(
                f"curve interrupted at n={n}: {exc}", points=points, failure=exc
            ) from exc
        points.append((len(context), concept_mass(tree, concept)))
    return points


def tree_to_dict(tree: PredictionTree) -> dict:
    """JSON-ready document: node path (bit string) to Tails-edge probability."""
    return {
        "depth": tree.depth,
        "root_context": tree.root_context.to_bits(),
        "edges": {
            path.to_bits(): prob
            for path, prob in sorted(
                tree.edge_probs.items(), key=lambda kv: (len(kv[0]), kv[0].flips)
            )
        },
    }


def tree_from_dict(doc: dict) -> PredictionTree:
    return PredictionTree(
        depth=int(doc["depth"]),
        root_context=BinarySequence.from_bits(doc["root_context"]),
        edge_probs={
            BinarySequence.from_bits(path): float(p) for path, p in doc["edges"].items()
        },
    )


def tree_csv_rows(tree: PredictionTree, concept: Concept | None = None) -> list:
    """Flat rows (path, probability, in_concept) over all 2^d leaf paths."""
    in_concept = concept_paths(concept, tree.depth) if concept is not None else set()
    leaves = tree.leaf_probabilities()
    return [
        (path.to_bits(), prob, path in in_concept)
        for path, prob in sorted(leaves.items(), key=lambda kv: kv[0].flips)
    ]
