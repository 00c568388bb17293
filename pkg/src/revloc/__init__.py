"""Review mining and change localization for mobile-app feedback.

The pipeline turns raw user reviews into fine-grained concern clusters and,
for each review, a ranking of the source files most likely to change.
"""

from .clustering import (
    ClusterAssignment,
    ConstraintSet,
    close_constraints,
    cop_kmeans,
    infer_k,
    load_constraints,
)
from .config import PipelineConfig, load_config, with_overrides
from .errors import (
    ConfigError,
    ConstraintInconsistencyError,
    FormatError,
    InfeasibleAssignmentError,
    RevlocError,
)
from .evaluation import (
    EvalReport,
    dbi,
    evaluate_rankings,
    load_ground_truth,
    ndcg_at_k,
    ndcg_of_vector,
    top_k_accuracy,
)
from .localization import (
    CommitRecord,
    FilePair,
    LocalizationRanking,
    build_df,
    dice_sim,
    extract_code_doc,
    interpolated_sim,
    load_commits,
    rank_files,
    tag_files,
)
from .reviews import (
    Category,
    CueConfig,
    Review,
    filter_informative,
    heuristic_classify,
    load_reviews,
    parse_instant,
)
from .segmentation import AtomicSentence, SegmenterConfig, segment_atomic, segment_review
from .textproc import (
    TextNormalizer,
    TokenDoc,
    drop_short,
    normalize_tokens,
    strip_noise,
    to_token_docs,
)
from .vsm import (
    DfTable,
    ReducedDataSet,
    WordReviewMatrix,
    build_matrix,
    pca_reduce,
    project,
    reconstruct,
)

__version__ = "0.1.0"

__all__ = [
    "AtomicSentence",
    "Category",
    "ClusterAssignment",
    "CommitRecord",
    "ConfigError",
    "ConstraintInconsistencyError",
    "ConstraintSet",
    "CueConfig",
    "DfTable",
    "EvalReport",
    "FilePair",
    "FormatError",
    "InfeasibleAssignmentError",
    "LocalizationRanking",
    "PipelineConfig",
    "ReducedDataSet",
    "Review",
    "RevlocError",
    "SegmenterConfig",
    "TextNormalizer",
    "TokenDoc",
    "WordReviewMatrix",
    "build_df",
    "build_matrix",
    "close_constraints",
    "cop_kmeans",
    "dbi",
    "dice_sim",
    "drop_short",
    "evaluate_rankings",
    "extract_code_doc",
    "filter_informative",
    "heuristic_classify",
    "infer_k",
    "interpolated_sim",
    "load_commits",
    "load_config",
    "load_constraints",
    "load_ground_truth",
    "load_reviews",
    "ndcg_at_k",
    "ndcg_of_vector",
    "normalize_tokens",
    "parse_instant",
    "pca_reduce",
    "project",
    "rank_files",
    "reconstruct",
    "segment_atomic",
    "segment_review",
    "strip_noise",
    "tag_files",
    "to_token_docs",
    "top_k_accuracy",
    "with_overrides",
]
