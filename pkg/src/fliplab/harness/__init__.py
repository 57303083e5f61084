"""Experiment definitions, batch runner, persistence, and reports."""

from .config import (
    DEFAULT_CONCEPTS,
    DEFAULT_P_GRID,
    DEFAULT_SUBSEQ_KS,
    ExperimentConfig,
)
from .runner import (
    RunError,
    RunSummary,
    run_generation,
    run_judgment,
    run_learning_curve,
)
from .report import report

__all__ = [
    "DEFAULT_CONCEPTS",
    "DEFAULT_P_GRID",
    "DEFAULT_SUBSEQ_KS",
    "ExperimentConfig",
    "RunError",
    "RunSummary",
    "run_generation",
    "run_judgment",
    "run_learning_curve",
    "report",
]
