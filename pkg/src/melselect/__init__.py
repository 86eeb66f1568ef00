"""Selective-classification evaluation toolkit for melanoma prediction sets.

Pipeline: parse prediction files, annotate entropy-based uncertainty, sweep
rejection thresholds on a validation set, apply the selected threshold to a
test set, and report classification/calibration metrics before and after
rejection. A small HTTP service exposes runs and a human-review queue for
the rejected ("Uncertain") samples.
"""

from .calibration import CalibrationMetrics, brier_score, expected_calibration_error, reliability_curve
from .ingest import (
    DatasetManifest,
    EvaluationSet,
    PredictionRecord,
    binarize_labels,
    build_oversample_plan,
    make_split,
    merge_manifests,
    parse_dataset_layout,
    parse_predictions,
    serialize_predictions,
)
from .metrics import ClassificationMetrics, ConfusionCounts, auc_roc, classification_metrics, confusion_counts
from .rejection import (
    NoFeasibleThresholdError,
    PartitionedSet,
    RejectionPolicy,
    SweepPoint,
    apply_threshold,
    evaluate_with_rejection,
    select_threshold,
    sweep_thresholds,
)
from .report import BeforeAfterRow, ReductionSummary, false_diagnosis_reduction, format_before_after_row, rank_leaderboard
from .uncertainty import annotate_set, shannon_entropy

__version__ = "0.1.0"

__all__ = [
    "BeforeAfterRow",
    "CalibrationMetrics",
    "ClassificationMetrics",
    "ConfusionCounts",
    "DatasetManifest",
    "EvaluationSet",
    "NoFeasibleThresholdError",
    "PartitionedSet",
    "PredictionRecord",
    "ReductionSummary",
    "RejectionPolicy",
    "SweepPoint",
    "annotate_set",
    "apply_threshold",
    "auc_roc",
    "binarize_labels",
    "brier_score",
    "build_oversample_plan",
    "classification_metrics",
    "confusion_counts",
    "evaluate_with_rejection",
    "expected_calibration_error",
    "false_diagnosis_reduction",
    "format_before_after_row",
    "make_split",
    "merge_manifests",
    "parse_dataset_layout",
    "parse_predictions",
    "rank_leaderboard",
    "reliability_curve",
    "select_threshold",
    "serialize_predictions",
    "shannon_entropy",
    "sweep_thresholds",
]
