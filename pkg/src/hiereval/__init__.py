"""Evaluation toolkit for hierarchical text detection and word-level
end-to-end recognition.

Detections are scored as instance segmentation at three hierarchy levels
(word, line, paragraph) with the panoptic-quality metric; end-to-end
submissions are scored with case-sensitive word-level F1. Includes a
fixture generator, an independent dense brute-force oracle, and
leaderboard construction.
"""

from .annotations import (
    GroundTruthDataset,
    ImageAnnotation,
    Line,
    Paragraph,
    Polygon,
    Task1Submission,
    Task2Submission,
    Task2Word,
    ValidationReport,
    Vertex,
    Word,
    parse_ground_truth,
    parse_task1_submission,
    parse_task2_submission,
    serialize_ground_truth,
    serialize_task1_submission,
    serialize_task2_submission,
    validate_dataset,
)
from .errors import (
    ContractViolation,
    GenerationError,
    HierEvalError,
    OracleLimitError,
    ParseError,
    SchemaError,
    ValidationError,
)
from .evaluators import (
    EvalOptions,
    Task1Report,
    Task2Report,
    build_level_instances,
    evaluate_task1,
    evaluate_task2,
    report_from_doc,
    report_to_doc,
)
from .fixtures import FixtureBundle, NoiseConfig, SceneConfig, generate_scene, write_bundle
from .geometry import Grid, RleMask, mask_area, mask_iou, mask_union, rasterize_polygon
from .leaderboard import (
    LeaderboardRow,
    SubmissionRecord,
    dedup_submissions,
    load_manifest,
    rank_entries,
    render_report,
)
from .matching import MatchPair, MatchResult, filter_dontcare, greedy_match
from .metrics import (
    HpqScore,
    MetricBundle,
    bundle_from_counts,
    char_histogram,
    h_pq,
    pearson,
    word_density,
)
from .oracle import oracle_evaluate_task1, oracle_evaluate_task2

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # annotations
    "Vertex",
    "Polygon",
    "Word",
    "Line",
    "Paragraph",
    "ImageAnnotation",
    "GroundTruthDataset",
    "Task1Submission",
    "Task2Word",
    "Task2Submission",
    "ValidationReport",
    "parse_ground_truth",
    "parse_task1_submission",
    "parse_task2_submission",
    "serialize_ground_truth",
    "serialize_task1_submission",
    "serialize_task2_submission",
    "validate_dataset",
    # errors
    "HierEvalError",
    "ParseError",
    "SchemaError",
    "ValidationError",
    "ContractViolation",
    "GenerationError",
    "OracleLimitError",
    # geometry
    "Grid",
    "RleMask",
    "rasterize_polygon",
    "mask_union",
    "mask_iou",
    "mask_area",
    # matching
    "MatchPair",
    "MatchResult",
    "greedy_match",
    "filter_dontcare",
    # metrics
    "MetricBundle",
    "HpqScore",
    "bundle_from_counts",
    "h_pq",
    "pearson",
    "char_histogram",
    "word_density",
    # evaluators
    "EvalOptions",
    "Task1Report",
    "Task2Report",
    "build_level_instances",
    "evaluate_task1",
    "evaluate_task2",
    "report_to_doc",
    "report_from_doc",
    # leaderboard
    "SubmissionRecord",
    "LeaderboardRow",
    "dedup_submissions",
    "rank_entries",
    "render_report",
    "load_manifest",
    # fixtures + oracle
    "SceneConfig",
    "NoiseConfig",
    "FixtureBundle",
    "generate_scene",
    "write_bundle",
    "oracle_evaluate_task1",
    "oracle_evaluate_task2",
]
