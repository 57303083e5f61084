"""fliplab: randomness analysis and in-context learning dynamics for coin flips."""

from .sequences import (
    BinarySequence,
    TokenFormat,
    ParseResult,
    DEFAULT_FORMAT,
    parse_flips,
    render,
    is_primitive,
)
from .models import (
    Bernoulli,
    WindowAverage,
    MarkovChain,
    RegularRepeater,
    SeededRng,
    markov_fit,
    model_from_dict,
    model_from_string,
    DescriptionLengthConfig,
)
from .bayes import (
    Hypothesis,
    HypothesisSpace,
    Posterior,
    RandomnessScore,
    posterior,
    predictive_next,
    randomness_score,
    judgment_curve,
    curve_csv_rows,
    enumerate_repeaters,
    log2sumexp,
)
from .trees import (
    Concept,
    PredictionTree,
    build_tree,
    concept_paths,
    concept_mass,
    learning_curve,
)
from .metrics import (
    SequenceSet,
    MetricReport,
    GamblerStats,
    compressed_size,
    compressed_size_report,
    levenshtein,
    mean_pairwise_levenshtein,
    unique_subseq_count,
    gambler_stats,
)

__version__ = "0.1.0"

__all__ = [
    "BinarySequence",
    "TokenFormat",
    "ParseResult",
    "DEFAULT_FORMAT",
    "parse_flips",
    "render",
    "is_primitive",
    "Bernoulli",
    "WindowAverage",
    "MarkovChain",
    "RegularRepeater",
    "SeededRng",
    "markov_fit",
    "model_from_dict",
    "model_from_string",
    "DescriptionLengthConfig",
    "Hypothesis",
    "HypothesisSpace",
    "Posterior",
    "RandomnessScore",
    "posterior",
    "predictive_next",
    "randomness_score",
    "judgment_curve",
    "curve_csv_rows",
    "enumerate_repeaters",
    "log2sumexp",
    "Concept",
    "PredictionTree",
    "build_tree",
    "concept_paths",
    "concept_mass",
    "learning_curve",
    "SequenceSet",
    "MetricReport",
    "GamblerStats",
    "compressed_size",
    "compressed_size_report",
    "levenshtein",
    "mean_pairwise_levenshtein",
    "unique_subseq_count",
    "gambler_stats",
    "__version__",
]
