"""Brier score, expected calibration error, and reliability-curve data.

Confidence is the maximum class probability. ECE uses M equal-width,
right-closed bins over [0, 1]; a confidence of exactly 0 falls into the
first bin. The Brier score uses the single positive-class probability
against the binary outcome, keeping it in [0, 1].
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass

from .ingest import EvaluationSet

DEFAULT_BINS = 10


@dataclass(frozen=True)
class BinStat:
    """One confidence bin: edges, population, mean confidence, accuracy.

    ``mean_confidence`` and ``accuracy`` are None for empty bins.
    """

    lower: float
    upper: float
    count: int
    mean_confidence: float | None
    accuracy: float | None


@dataclass(frozen=True)
class CalibrationMetrics:
    ece: float
    brier: float
    bins: tuple[BinStat, ...]

    def as_dict(self) -> dict[str, float]:
        return {"ece": self.ece, "brier": self.brier}


def _require_labeled(evalset: EvaluationSet) -> None:
    if len(evalset) == 0:
        raise ValueError("cannot score an empty set")
    for rec in evalset.records:
        if rec.true_label is None:
            raise ValueError(f"record {rec.sample_id!r} is missing its true label")


def brier_score(evalset: EvaluationSet) -> float:
    """Mean squared error of the positive-class probability vs the outcome."""
    _require_labeled(evalset)
    pos = evalset.positive_class
    total = 0.0
    for rec in evalset.records:
        y = 1.0 if rec.true_label == pos else 0.0
        total += (rec.probs[pos] - y) ** 2
    return total / len(evalset)


def _bin_index(confidence: float, edges: list[float]) -> int:
    # right-closed bins ((m-1)/M, m/M]; exact 0 folds into bin 0
    return bisect_left(edges, confidence)


def compute_bins(evalset: EvaluationSet, bins: int = DEFAULT_BINS) -> tuple[BinStat, ...]:
    """Assign each sample to one confidence bin and summarize every bin."""
    _require_labeled(evalset)
    if bins < 1:
        raise ValueError(f"bin count must be >= 1, got {bins}")
    inner_edges = [i / bins for i in range(1, bins)]
    counts = [0] * bins
    conf_sums = [0.0] * bins
    correct = [0] * bins
    for rec in evalset.records:
        b = _bin_index(rec.confidence, inner_edges)
        counts[b] += 1
        conf_sums[b] += rec.confidence
        if rec.predicted_label == rec.true_label:
            correct[b] += 1
    stats = []
    for b in range(bins):
        stats.append(
            BinStat(
                lower=b / bins,
                upper=(b + 1) / bins,
                count=counts[b],
                mean_confidence=conf_sums[b] / counts[b] if counts[b] else None,
                accuracy=correct[b] / counts[b] if counts[b] else None,
            )
        )
    return tuple(stats)


def expected_calibration_error(
    evalset: EvaluationSet, bins: int = DEFAULT_BINS
) -> tuple[float, tuple[BinStat, ...]]:
    """Bin-weighted mean |accuracy - mean confidence|; empty bins contribute 0."""
    stats = compute_bins(evalset, bins)
    n = len(evalset)
    ece = 0.0
    for s in stats:
        if s.count == 0:
            continue
        assert s.accuracy is not None and s.mean_confidence is not None
        ece += (s.count / n) * abs(s.accuracy - s.mean_confidence)
    return ece, stats


def calibration_metrics(evalset: EvaluationSet, bins: int = DEFAULT_BINS) -> CalibrationMetrics:
    """ECE, Brier score, and the underlying bins in one pass."""
    ece, stats = expected_calibration_error(evalset, bins)
    return CalibrationMetrics(ece=ece, brier=brier_score(evalset), bins=stats)


def reliability_curve(
    evalset: EvaluationSet, bins: int = DEFAULT_BINS
) -> list[tuple[float, float]]:
    """(mean confidence, accuracy) per non-empty bin, in bin order.

    Plotted against the ideal reference y = x.
    """
    stats = compute_bins(evalset, bins)
    return [
        (s.mean_confidence, s.accuracy)
        for s in stats
        if s.count > 0 and s.mean_confidence is not None and s.accuracy is not None
    ]


def reliability_csv(stats: tuple[BinStat, ...]) -> str:
    """Render bin stats as ``bin_lower,bin_upper,count,mean_confidence,accuracy``."""
    lines = ["bin_lower,bin_upper,count,mean_confidence,accuracy"]
    for s in stats:
        mean_c = "" if s.mean_confidence is None else repr(s.mean_confidence)
        acc = "" if s.accuracy is None else repr(s.accuracy)
        lines.append(f"{s.lower!r},{s.upper!r},{s.count},{mean_c},{acc}")
    return "\n".join(lines) + "\n"
