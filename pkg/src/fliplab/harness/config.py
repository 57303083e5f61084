"""Experiment configuration: grids, protocols, seeds, and persistence schema."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

from ..llm.config import ProviderConfig
from ..sequences import BinarySequence, is_primitive

__all__ = [
    "CONFIG_VERSION",
    "DEFAULT_P_GRID",
    "DEFAULT_CONCEPTS",
    "DEFAULT_SUBSEQ_KS",
    "ExperimentConfig",
]

CONFIG_VERSION = 1

DEFAULT_P_GRID = (0.05, 0.1, 0.2, 0.3, 0.4, 0.49, 0.5, 0.51, 0.6, 0.7, 0.8, 0.9, 0.95)

# All primitive patterns up to length 3, one per rotation class.
DEFAULT_CONCEPTS = ("0", "1", "01", "001", "011")

DEFAULT_SUBSEQ_KS = (5, 10, 15, 20, 25)

EXPERIMENT_KINDS = ("generation", "judgment", "learning_curve")


@dataclass(frozen=True)
class ExperimentConfig:
    """One batch experiment: protocol kind, provider, grids, and seed."""

    kind: str
    provider: ProviderConfig
    p_grid: tuple = DEFAULT_P_GRID
    samples_per_cell: int = 200
    crop_len: int = 50
    concepts: tuple = DEFAULT_CONCEPTS
    n_range: tuple = tuple(range(1, 14))
    depth_list: tuple = (4, 6)
    seed: int = 0
    tree_p: float = 0.5          # P(Tails) used in tree-building prompts
    min_flips: int = 5           # responses parsing fewer flips are flagged
    subseq_ks: tuple = DEFAULT_SUBSEQ_KS
    cache_dir: Optional[str] = None  # defaults to <out>/cache

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ValueError(f"kind must be one of {EXPERIMENT_KINDS}, got {self.kind!r}")
        for name in ("p_grid", "concepts", "n_range", "depth_list", "subseq_ks"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
            if not getattr(self, name):
                raise ValueError(f"{name} must be non-empty")
        if any(not 0.0 <= p <= 1.0 for p in self.p_grid):
            raise ValueError("p_grid values must be probabilities")
        if self.crop_len < 1:
            raise ValueError("crop_len must be >= 1")
        if self.samples_per_cell < 1:
            raise ValueError("samples_per_cell must be >= 1")
        if self.min_flips < 2:
            raise ValueError("min_flips must be >= 2 (sequence statistics need 2 flips)")
        if list(self.n_range) != sorted(self.n_range) or self.n_range[0] < 1:
            raise ValueError("n_range must be ascending positive integers")
        if any(not 1 <= d <= 8 for d in self.depth_list):
            raise ValueError("depth_list entries must be in [1, 8]")
        for concept in self.concepts:
            pattern = BinarySequence.from_bits(concept)
            if not is_primitive(pattern):
                raise ValueError(f"concept {concept!r} repeats a shorter pattern")

    def to_dict(self) -> dict:
        return {
            "version": CONFIG_VERSION,
            "kind": self.kind,
            "provider": self.provider.to_dict(),
            "p_grid": list(self.p_grid),
            "samples_per_cell": self.samples_per_cell,
            "crop_len": self.crop_len,
            "concepts": list(self.concepts),
            "n_range": list(self.n_range),
            "depth_list": list(self.depth_list),
            "seed": self.seed,
            "tree_p": self.tree_p,
            "min_flips": self.min_flips,
            "subseq_ks": list(self.subseq_ks),
            "cache_dir": self.cache_dir,
        }

    @classmethod
    def from_dict(cls, record: dict) -> "ExperimentConfig":
        version = record.get("version")
        if version != CONFIG_VERSION:
            raise ValueError(f"unsupported config version {version!r}")
        return cls(
            kind=record["kind"],
            provider=ProviderConfig.from_dict(record["provider"]),
            p_grid=tuple(record.get("p_grid", DEFAULT_P_GRID)),
            samples_per_cell=int(record.get("samples_per_cell", 200)),
            crop_len=int(record.get("crop_len", 50)),
            concepts=tuple(record.get("concepts", DEFAULT_CONCEPTS)),
            n_range=tuple(record.get("n_range", tuple(range(1, 14)))),
            depth_list=tuple(record.get("depth_list", (4, 6))),
            seed=int(record.get("seed", 0)),
            tree_p=float(record.get("tree_p", 0.5)),
            min_flips=int(record.get("min_flips", 5)),
            subseq_ks=tuple(record.get("subseq_ks", DEFAULT_SUBSEQ_KS)),
            cache_dir=record.get("cache_dir"),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_json_file(cls, path: Path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def digest(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]

    def with_kind(self, kind: str) -> "ExperimentConfig":
        return self if kind == self.kind else replace(self, kind=kind)
