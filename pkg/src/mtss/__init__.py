"""mtss: measure how MT output evolves across training checkpoints.

Library plus CLI for target-side language-model scores, alignment
monotonicity (fuzzy reordering score, Kendall tau distance), BLEU, and
token-frequency profiles over checkpoint translations, with training-stage
detection and distillation-teacher recommendation on top.
"""

__version__ = "0.1.0"

from .align import (  # noqa: E402
    AlignmentModel,
    SentenceAlignment,
    emit_pharaoh,
    parse_pharaoh_line,
    train_aligner,
    viterbi_align,
)
from .arpa import export_arpa, import_arpa  # noqa: E402
from .corpus import (  # noqa: E402
    CheckpointManifest,
    ParallelCorpus,
    Sentence,
    Vocabulary,
    build_vocabulary,
    load_manifest,
    load_parallel,
    load_sentences,
    tokenize,
)
from .errors import DataError, MtssError  # noqa: E402
from .metrics import (  # noqa: E402
    AccuracyResult,
    BleuResult,
    FrequencyBuckets,
    PredictionRecord,
    bleu,
    frequency_rank_profile,
    token_accuracy_by_frequency,
)
from .ngram import LMScore, NGramCounts, NGramLM, count_ngrams, train_from_sentences, train_lm  # noqa: E402
from .reorder import (  # noqa: E402
    ReorderingSummary,
    SourcePermutation,
    corpus_reordering_scores,
    count_inversions,
    derive_permutation,
    fuzzy_reordering_score,
    kendall_tau_distance,
)
from .trajectory import (  # noqa: E402
    AlignerConfig,
    MetricTrajectory,
    StageBoundaries,
    TeacherRecommendation,
    TrajectoryRow,
    compute_trajectory,
    detect_stages,
    read_trajectory_csv,
    recommend_teacher,
    write_trajectory_csv,
)

__all__ = [
    "AccuracyResult",
    "AlignerConfig",
    "AlignmentModel",
    "BleuResult",
    "CheckpointManifest",
    "DataError",
    "FrequencyBuckets",
    "LMScore",
    "MetricTrajectory",
    "MtssError",
    "NGramCounts",
    "NGramLM",
    "ParallelCorpus",
    "PredictionRecord",
    "ReorderingSummary",
    "Sentence",
    "SentenceAlignment",
    "SourcePermutation",
    "StageBoundaries",
    "TeacherRecommendation",
    "TrajectoryRow",
    "Vocabulary",
    "bleu",
    "build_vocabulary",
    "compute_trajectory",
    "corpus_reordering_scores",
    "count_inversions",
    "count_ngrams",
    "derive_permutation",
    "detect_stages",
    "emit_pharaoh",
    "export_arpa",
    "frequency_rank_profile",
    "fuzzy_reordering_score",
    "import_arpa",
    "kendall_tau_distance",
    "load_manifest",
    "load_parallel",
    "load_sentences",
    "parse_pharaoh_line",
    "read_trajectory_csv",
    "recommend_teacher",
    "token_accuracy_by_frequency",
    "tokenize",
    "train_aligner",
    "train_from_sentences",
    "train_lm",
    "viterbi_align",
    "write_trajectory_csv",
]
