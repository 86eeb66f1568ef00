"""Entropy-threshold rejection and validation-set threshold selection.

A record is rejected when its entropy strictly exceeds the threshold, so
boundary samples are kept. The threshold is picked on a validation sweep by
minimizing the mean of ECE and Brier over the accepted subset, subject to a
cap on the rejected fraction, and then applied unchanged to the test set.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from . import calibration, metrics
from .ingest import EvaluationSet

DEFAULT_MAX_REJECT_FRACTION = 0.20
DEFAULT_GRID_STEP = 0.01


class NoFeasibleThresholdError(ValueError):
    """No sweep point satisfies the rejection-budget and metric constraints."""


@dataclass(frozen=True)
class RejectionPolicy:
    threshold: float
    max_reject_fraction: float = DEFAULT_MAX_REJECT_FRACTION
    grid_step: float = DEFAULT_GRID_STEP

    def __post_init__(self) -> None:
        if not (0.0 <= self.threshold <= 1.0):
            raise ValueError(f"threshold must be in [0,1], got {self.threshold}")


@dataclass(frozen=True)
class SweepPoint:
    """Metrics of the accepted subset at one candidate threshold."""

    threshold: float
    reject_fraction: float
    accuracy: float | None
    ece: float | None
    brier: float | None
    objective: float | None
    feasible: bool


@dataclass(frozen=True)
class PartitionedSet:
    accepted: EvaluationSet
    rejected: EvaluationSet


@dataclass(frozen=True)
class SetEvaluation:
    """Classification plus calibration metrics of one population."""

    n: int
    classification: metrics.ClassificationMetrics
    calibration: calibration.CalibrationMetrics | None
    confusion: metrics.ConfusionCounts | None = None
    degenerate: str | None = None  # "empty" | "single-class" | None


@dataclass(frozen=True)
class RejectionEvaluation:
    before: SetEvaluation
    after: SetEvaluation
    partition: PartitionedSet
    policy: RejectionPolicy


def _require_annotated(evalset: EvaluationSet) -> None:
    for rec in evalset.records:
        if rec.entropy is None:
            raise ValueError(f"record {rec.sample_id!r} has no entropy annotation")


def apply_threshold(evalset: EvaluationSet, t: float) -> PartitionedSet:
    """Split into accepted (entropy <= t) and rejected (entropy > t) parts."""
    _require_annotated(evalset)
    accepted = []
    rejected = []
    for rec in evalset.records:
        (rejected if rec.entropy > t else accepted).append(rec)  # type: ignore[operator]
    return PartitionedSet(
        accepted=replace(evalset, records=tuple(accepted), name=f"{evalset.name}/accepted"),
        rejected=replace(evalset, records=tuple(rejected), name=f"{evalset.name}/rejected"),
    )


def threshold_grid(step: float = DEFAULT_GRID_STEP) -> list[float]:
    """Candidate thresholds {0, step, 2*step, ..., 1}."""
    if step <= 0:
        raise ValueError(f"grid step must be positive, got {step}")
    n_steps = round(1.0 / step)
    if n_steps >= 1 and abs(n_steps * step - 1.0) < 1e-9:
        return [i / n_steps for i in range(n_steps + 1)]
    grid = []
    t = 0.0
    i = 0
    while t < 1.0 - 1e-12:
        grid.append(t)
        i += 1
        t = i * step
    grid.append(1.0)
    return grid


def _single_class(evalset: EvaluationSet) -> bool:
    seen = {rec.true_label for rec in evalset.records}
    return len(seen) < 2


def sweep_thresholds(
    val: EvaluationSet,
    policy: RejectionPolicy | None = None,
    *,
    bins: int = calibration.DEFAULT_BINS,
) -> list[SweepPoint]:
    """Evaluate the accepted subset of a labeled validation set per grid point.

    A point is infeasible when it rejects more than the policy cap, leaves
    nothing accepted, or leaves a single-class subset (which degrades the
    metric family).
    """
    if not val.labeled:
        raise ValueError("threshold sweep needs a fully labeled validation set")
    _require_annotated(val)
    if policy is None:
        policy = RejectionPolicy(threshold=1.0)

    n = len(val)
    points = []
    for t in threshold_grid(policy.grid_step):
        part = apply_threshold(val, t)
        reject_fraction = len(part.rejected) / n
        if len(part.accepted) == 0:
            points.append(
                SweepPoint(
                    threshold=t,
                    reject_fraction=reject_fraction,
                    accuracy=None,
                    ece=None,
                    brier=None,
                    objective=None,
                    feasible=False,
                )
            )
            continue
        counts = metrics.confusion_counts(part.accepted)
        cal = calibration.calibration_metrics(part.accepted, bins)
        feasible = (
            reject_fraction <= policy.max_reject_fraction
            and not _single_class(part.accepted)
        )
        points.append(
            SweepPoint(
                threshold=t,
                reject_fraction=reject_fraction,
                accuracy=(counts.tp + counts.tn) / counts.n,
                ece=cal.ece,
                brier=cal.brier,
                objective=(cal.ece + cal.brier) / 2.0,
                feasible=feasible,
            )
        )
    return points


def select_threshold(sweep: list[SweepPoint], policy: RejectionPolicy | None = None) -> RejectionPolicy:
    """Feasible threshold minimizing (ECE + Brier) / 2.

    Ties break toward the smaller reject fraction, then the smaller
    threshold.
    """
    best: SweepPoint | None = None
    for point in sweep:
        if not point.feasible or point.objective is None:
            continue
        if best is None:
            best = point
            continue
        key = (point.objective, point.reject_fraction, point.threshold)
        best_key = (best.objective, best.reject_fraction, best.threshold)
        if key < best_key:
            best = point
    if best is None:
        raise NoFeasibleThresholdError("no admissible threshold in sweep")
    template = policy or RejectionPolicy(threshold=best.threshold)
    return replace(template, threshold=best.threshold)


def evaluate_set(evalset: EvaluationSet, bins: int = calibration.DEFAULT_BINS) -> SetEvaluation:
    """Full metric panel for one labeled population; tolerates degeneracy."""
    if len(evalset) == 0:
        return SetEvaluation(
            n=0,
            classification=metrics.ClassificationMetrics(None, None, None, None, None, None),
            calibration=None,
            confusion=None,
            degenerate="empty",
        )
    counts = metrics.confusion_counts(evalset)
    auc = metrics.auc_roc_for_set(evalset)
    cls = metrics.classification_metrics(counts, auc)
    cal = calibration.calibration_metrics(evalset, bins)
    degenerate = "single-class" if _single_class(evalset) else None
    return SetEvaluation(
        n=len(evalset), classification=cls, calibration=cal, confusion=counts, degenerate=degenerate
    )


def evaluate_with_rejection(
    test: EvaluationSet,
    policy: RejectionPolicy,
    *,
    bins: int = calibration.DEFAULT_BINS,
) -> RejectionEvaluation:
    """Before/after metric pair for a labeled, annotated test set.

    "Before" covers the full set; "after" covers only the accepted subset,
    with rejected samples excluded from every metric.
    """
    if not test.labeled:
        raise ValueError("evaluation needs a fully labeled test set")
    _require_annotated(test)
    partition = apply_threshold(test, policy.threshold)
    before = evaluate_set(test, bins)
    after = evaluate_set(partition.accepted, bins)
    return RejectionEvaluation(before=before, after=after, partition=partition, policy=policy)


def sweep_csv(sweep: list[SweepPoint]) -> str:
    """Render sweep points as plot-ready CSV (one row per threshold)."""
    lines = ["threshold,reject_fraction,accuracy,ece,brier,objective,feasible"]
    for p in sweep:
        cells = [
            repr(p.threshold),
            repr(p.reject_fraction),
            "" if p.accuracy is None else repr(p.accuracy),
            "" if p.ece is None else repr(p.ece),
            "" if p.brier is None else repr(p.brier),
            "" if p.objective is None else repr(p.objective),
            "true" if p.feasible else "false",
        ]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"
