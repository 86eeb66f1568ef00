"""Confusion-matrix classification metrics and AUC-ROC for binary sets.

The positive class is the set's Melanoma class. Metrics with a zero
denominator are reported as None ("undefined") rather than coerced to 0,
so small post-rejection subsets cannot silently bias averages.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .ingest import EvaluationSet


class UndefinedAucError(ValueError):
    """Raised when AUC is requested for a single-class population."""


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class ClassificationMetrics:
    """Precision/sensitivity/specificity/F1/accuracy/AUC; None = undefined."""

    precision: float | None
    sensitivity: float | None
    specificity: float | None
    f1: float | None
    accuracy: float | None
    auc_roc: float | None

    FIELDS = ("precision", "specificity", "sensitivity", "f1", "accuracy", "auc_roc")

    def as_dict(self) -> dict[str, float | None]:
        return {name: getattr(self, name) for name in self.FIELDS}


def confusion_counts(evalset: EvaluationSet) -> ConfusionCounts:
    """Tally argmax predictions against true labels (positive = Melanoma)."""
    if len(evalset) == 0:
        raise ValueError("cannot tally an empty set")
    pos = evalset.positive_class
    tp = fp = tn = fn = 0
    for rec in evalset.records:
        if rec.true_label is None:
            raise ValueError(f"record {rec.sample_id!r} is missing its true label")
        predicted_pos = rec.predicted_label == pos
        actual_pos = rec.true_label == pos
        if predicted_pos and actual_pos:
            tp += 1
        elif predicted_pos and not actual_pos:
            fp += 1
        elif not predicted_pos and actual_pos:
            fn += 1
        else:
            tn += 1
    return ConfusionCounts(tp=tp, fp=fp, tn=tn, fn=fn)


def _ratio(num: int, den: int) -> float | None:
    return num / den if den > 0 else None


def classification_metrics(c: ConfusionCounts, auc: float | None = None) -> ClassificationMetrics:
    """Derive the standard metric family from confusion counts.

    AUC is computed elsewhere (it needs scores, not counts) and passed in;
    None marks it undefined.
    """
    precision = _ratio(c.tp, c.tp + c.fp)
    sensitivity = _ratio(c.tp, c.tp + c.fn)
    specificity = _ratio(c.tn, c.tn + c.fp)
    accuracy = _ratio(c.tp + c.tn, c.n)
    f1 = None
    if precision is not None and sensitivity is not None and precision + sensitivity > 0:
        f1 = 2.0 * precision * sensitivity / (precision + sensitivity)
    return ClassificationMetrics(
        precision=precision,
        sensitivity=sensitivity,
        specificity=specificity,
        f1=f1,
        accuracy=accuracy,
        auc_roc=auc,
    )


def auc_roc(scores: Sequence[float], labels: Sequence[bool]) -> float:
    """Probability that a positive outranks a negative; ties score 0.5.

    Rank-based (Mann-Whitney) computation, done in integer arithmetic on
    doubled rank sums so the result matches the brute-force pairwise
    definition bit for bit.
    """
    if len(scores) != len(labels):
        raise ValueError("scores and labels must be the same length")
    n_pos = sum(1 for l in labels if l)
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedAucError("AUC undefined: need at least one positive and one negative")

    order = sorted(range(len(scores)), key=lambda i: scores[i])
    # doubled tied ranks: a tie group spanning 1-based ranks lo..hi gets lo+hi
    doubled_rank_sum_pos = 0
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and scores[order[j + 1]] == scores[order[i]]:
            j += 1
        doubled = (i + 1) + (j + 1)
        for k in range(i, j + 1):
            if labels[order[k]]:
                doubled_rank_sum_pos += doubled
        i = j + 1

    doubled_u = doubled_rank_sum_pos - n_pos * (n_pos + 1)
    return doubled_u / (2 * n_pos * n_neg)


def positive_scores(evalset: EvaluationSet) -> tuple[list[float], list[bool]]:
    """Positive-class probabilities and labels for AUC over a labeled set."""
    scores = []
    labels = []
    for rec in evalset.records:
        if rec.true_label is None:
            raise ValueError(f"record {rec.sample_id!r} is missing its true label")
        scores.append(rec.probs[evalset.positive_class])
        labels.append(rec.true_label == evalset.positive_class)
    return scores, labels


def auc_roc_for_set(evalset: EvaluationSet) -> float | None:
    """AUC over a labeled set, or None when only one class is present."""
    scores, labels = positive_scores(evalset)
    try:
        return auc_roc(scores, labels)
    except UndefinedAucError:
        return None
