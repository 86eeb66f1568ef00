"""Before/after report rows, false-diagnosis reduction, and leaderboards.

Percentages render with one decimal place (half-up), undefined metrics as
an em-dash placeholder, matching the table conventions the rest of the
pipeline feeds into. All rendering is locale-independent.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from typing import Mapping, Sequence

from .ingest import EvaluationSet
from .metrics import confusion_counts
from .rejection import PartitionedSet, RejectionEvaluation, SetEvaluation

UNDEFINED_MARK = "—"

METRIC_COLUMNS = ("precision", "specificity", "sensitivity", "f1", "accuracy", "auc_roc")


def format_percent(value: float | None) -> str:
    """One-decimal percent with half-up rounding; None renders as a dash."""
    if value is None:
        return UNDEFINED_MARK
    return f"{math.floor(value * 1000 + 0.5) / 10:.1f}%"


def load_train_set_roster() -> dict[str, str]:
    """Letter -> dataset-name roster used for train-set codes (data file)."""
    text = resources.files("melselect.data").joinpath("train_set_roster.json").read_text("utf-8")
    return json.loads(text)


def expand_roster(code: str, roster: Mapping[str, str] | None = None) -> list[str]:
    """Expand a letter-coded roster like ``A-E,G,I`` into dataset names."""
    roster = roster or load_train_set_roster()
    letters: list[str] = []
    for part in code.strip("[] ").split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part and len(part) == 3:
            lo, hi = part[0], part[2]
            letters.extend(chr(c) for c in range(ord(lo), ord(hi) + 1))
        else:
            letters.append(part)
    return [roster[l] for l in letters]


@dataclass(frozen=True)
class BeforeAfterRow:
    """One table row: metric pairs before and after rejection."""

    test_set: str
    network: str
    train_sets: str
    threshold: float
    before: dict[str, float | None]
    after: dict[str, float | None]

    def to_json(self) -> str:
        doc = {
            "test_set": self.test_set,
            "network": self.network,
            "train_sets": self.train_sets,
            "threshold": self.threshold,
            "before": {k: self.before.get(k) for k in METRIC_COLUMNS},
            "after": {k: self.after.get(k) for k in METRIC_COLUMNS},
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "BeforeAfterRow":
        doc = json.loads(text)
        return cls(
            test_set=doc["test_set"],
            network=doc["network"],
            train_sets=doc["train_sets"],
            threshold=doc["threshold"],
            before={k: doc["before"].get(k) for k in METRIC_COLUMNS},
            after={k: doc["after"].get(k) for k in METRIC_COLUMNS},
        )

    def to_csv(self) -> str:
        header = ["test_set", "network", "train_sets", "threshold"]
        cells = [self.test_set, self.network, self.train_sets, repr(self.threshold)]
        for col in METRIC_COLUMNS:
            header.extend([f"{col}_before", f"{col}_after"])
            for value in (self.before.get(col), self.after.get(col)):
                cells.append("" if value is None else repr(value))
        return ",".join(header) + "\n" + ",".join(cells) + "\n"

    def to_text(self) -> str:
        pairs = [
            f"{col}: {format_percent(self.before.get(col))} / {format_percent(self.after.get(col))}"
            for col in METRIC_COLUMNS
        ]
        head = f"{self.test_set} | {self.network} | [{self.train_sets}] | threshold {self.threshold:g}"
        return head + "\n  " + "\n  ".join(pairs) + "\n"


def format_before_after_row(
    before: SetEvaluation,
    after: SetEvaluation,
    *,
    test_set: str,
    network: str = "external",
    train_sets: str = "",
    threshold: float,
) -> BeforeAfterRow:
    """Bundle an evaluation pair into a renderable table row."""

    def pick(ev: SetEvaluation) -> dict[str, float | None]:
        cls = ev.classification
        return {col: getattr(cls, col) for col in METRIC_COLUMNS}

    return BeforeAfterRow(
        test_set=test_set,
        network=network,
        train_sets=train_sets,
        threshold=threshold,
        before=pick(before),
        after=pick(after),
    )


@dataclass(frozen=True)
class ReductionSummary:
    """False-diagnosis counts before and after rejection.

    ``prevented`` is signed: rejection can also drop correct predictions, so
    a negative value is possible in principle.
    """

    fp_before: int
    fn_before: int
    fp_after: int
    fn_after: int

    @property
    def prevented(self) -> int:
        return (self.fp_before + self.fn_before) - (self.fp_after + self.fn_after)

    def as_dict(self) -> dict[str, int]:
        return {
            "fp_before": self.fp_before,
            "fn_before": self.fn_before,
            "fp_after": self.fp_after,
            "fn_after": self.fn_after,
            "prevented": self.prevented,
        }


def false_diagnosis_reduction(full: EvaluationSet, partition: PartitionedSet) -> ReductionSummary:
    """Count FP/FN on the full set versus the accepted subset."""
    before = confusion_counts(full)
    if len(partition.accepted) > 0:
        after = confusion_counts(partition.accepted)
        fp_after, fn_after = after.fp, after.fn
    else:
        fp_after = fn_after = 0
    return ReductionSummary(
        fp_before=before.fp,
        fn_before=before.fn,
        fp_after=fp_after,
        fn_after=fn_after,
    )


def reduction_csv(summaries: Mapping[str, ReductionSummary]) -> str:
    """Render per-test-set reduction counts for the bar-chart export."""
    lines = ["testset,fp_before,fn_before,fp_after,fn_after"]
    for name, s in summaries.items():
        lines.append(f"{name},{s.fp_before},{s.fn_before},{s.fp_after},{s.fn_after}")
    return "\n".join(lines) + "\n"


def rank_leaderboard(
    rows: Sequence[Mapping[str, object]], key: str
) -> list[Mapping[str, object]]:
    """Stable descending sort by a metric; undefined values sort last."""
    for row in rows:
        if key not in row:
            raise KeyError(f"leaderboard key {key!r} missing from a row")

    def sort_key(indexed: tuple[int, Mapping[str, object]]):
        value = indexed[1][key]
        if value is None:
            return (1, 0.0, indexed[0])
        return (0, -float(value), indexed[0])  # type: ignore[arg-type]

    return [row for _, row in sorted(enumerate(rows), key=sort_key)]


def leaderboard_document(rows: Sequence[Mapping[str, object]], key: str) -> dict:
    """Ranked rows plus best-per-column marks (presentation metadata)."""
    ranked = rank_leaderboard(rows, key)
    best: dict[str, int] = {}
    for col in METRIC_COLUMNS:
        best_idx = None
        best_val = None
        for i, row in enumerate(ranked):
            value = row.get(col)
            if value is None:
                continue
            if best_val is None or float(value) > best_val:  # type: ignore[arg-type]
                best_val = float(value)  # type: ignore[arg-type]
                best_idx = i
        if best_idx is not None:
            best[col] = best_idx
    return {"ranked_by": key, "rows": [dict(r) for r in ranked], "best_per_column": best}


def set_evaluation_document(ev: SetEvaluation) -> dict:
    doc: dict = {
        "n": ev.n,
        "degenerate": ev.degenerate,
        "classification": ev.classification.as_dict(),
    }
    doc["calibration"] = None if ev.calibration is None else ev.calibration.as_dict()
    doc["confusion"] = (
        None
        if ev.confusion is None
        else {"tp": ev.confusion.tp, "fp": ev.confusion.fp, "tn": ev.confusion.tn, "fn": ev.confusion.fn}
    )
    return doc


def evaluation_document(result: RejectionEvaluation) -> dict:
    """Canonical JSON-able before/after document shared by CLI and service."""
    reduction = false_diagnosis_reduction(
        _full_set_of(result), result.partition
    )
    n = len(result.partition.accepted) + len(result.partition.rejected)
    return {
        "threshold": result.policy.threshold,
        "policy": {
            "threshold": result.policy.threshold,
            "max_reject_fraction": result.policy.max_reject_fraction,
            "grid_step": result.policy.grid_step,
        },
        "counts": {
            "n": n,
            "accepted": len(result.partition.accepted),
            "rejected": len(result.partition.rejected),
        },
        "coverage": len(result.partition.accepted) / n if n else None,
        "before": set_evaluation_document(result.before),
        "after": set_evaluation_document(result.after),
        "reduction": reduction.as_dict(),
    }


def _full_set_of(result: RejectionEvaluation) -> EvaluationSet:
    accepted = result.partition.accepted
    return accepted.with_records(accepted.records + result.partition.rejected.records)
