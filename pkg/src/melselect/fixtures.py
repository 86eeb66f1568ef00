"""Synthetic prediction-set generator with ground-truth bookkeeping.

Produces validation/test prediction files whose error positions, entropies,
and per-bin calibration stats are all recorded in a sidecar, so downstream
metrics can be checked against independent bookkeeping instead of trusting
the pipeline under test.

Two modes:

* ``planted``: an exact number of errors is planted, split into false
  positives and false negatives, with a tunable fraction of them forced into
  the highest-entropy records of their class (the rest land uniformly).
* ``calibrated``: correctness is Bernoulli in the confidence, so per-bin
  accuracy tracks mean confidence and ECE is small by construction.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import calibration
from .ingest import MELANOMA, NON_MELANOMA, EvaluationSet, PredictionRecord, serialize_predictions
from .uncertainty import shannon_entropy

CLASS_NAMES = (MELANOMA, NON_MELANOMA)
POSITIVE_CLASS = 0

MODES = ("planted", "calibrated")


@dataclass(frozen=True)
class FixtureSpec:
    """Generator parameters; one spec covers both emitted sets."""

    n: int
    melanoma_fraction: float = 0.3
    error_rate: float = 0.1
    correlation: float = 0.5  # fraction of errors forced into top-entropy records
    fp_share: float = 0.5  # split of planted errors into false positives
    mode: str = "planted"
    entropy_alpha: float = 1.2
    entropy_beta: float = 3.0

    def __post_init__(self) -> None:
        if self.n <= 0:
            raise ValueError(f"fixture size must be positive, got {self.n}")
        if self.mode not in MODES:
            raise ValueError(f"unknown fixture mode {self.mode!r}")
        for name in ("melanoma_fraction", "error_rate", "correlation", "fp_share"):
            value = getattr(self, name)
            if not (0.0 <= value <= 1.0):
                raise ValueError(f"{name} must be in [0,1], got {value}")


@dataclass(frozen=True)
class Fixture:
    validation: EvaluationSet
    test: EvaluationSet
    sidecar: dict


def inverse_binary_entropy(h: float) -> float:
    """The p in [0.5, 1] with binary entropy h (bisection to full precision)."""
    if not (0.0 <= h <= 1.0):
        raise ValueError(f"entropy must be in [0,1], got {h}")
    if h == 0.0:
        return 1.0
    lo, hi = 0.5, 1.0  # binary entropy is decreasing on [0.5, 1]
    for _ in range(80):
        mid = (lo + hi) / 2.0
        if _binary_entropy(mid) > h:
            lo = mid
        else:
            hi = mid
    p = (lo + hi) / 2.0
    # keep strictly above one half so the argmax matches the intended class
    return max(p, math.nextafter(0.5, 1.0))


def _binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -(p * math.log2(p) + (1.0 - p) * math.log2(1.0 - p))


def _pick_errors(
    pool: np.ndarray, entropies: np.ndarray, count: int, correlation: float, rng: np.random.Generator
) -> np.ndarray:
    """Choose error positions within one class pool.

    ``correlation`` of the errors go to the pool's highest-entropy members;
    the rest are drawn uniformly from what is left.
    """
    if count == 0:
        return np.empty(0, dtype=np.int64)
    by_entropy = pool[np.argsort(-entropies[pool], kind="stable")]
    top_k = round(correlation * count)
    forced = by_entropy[:top_k]
    remaining = by_entropy[top_k:]
    uniform = rng.choice(remaining, size=count - top_k, replace=False)
    return np.concatenate([forced, uniform])


def _generate_set(spec: FixtureSpec, rng: np.random.Generator, name: str, role: str):
    n = spec.n
    n_mel = round(n * spec.melanoma_fraction)
    if n_mel == 0 or n_mel == n:
        raise ValueError("fixture needs both classes; adjust melanoma_fraction")

    mel_idx = rng.choice(n, size=n_mel, replace=False)
    is_mel = np.zeros(n, dtype=bool)
    is_mel[mel_idx] = True

    if spec.mode == "planted":
        entropies = rng.beta(spec.entropy_alpha, spec.entropy_beta, size=n)
        confidences = np.array([inverse_binary_entropy(h) for h in entropies])
        error_count = round(n * spec.error_rate)
        fp_count = round(error_count * spec.fp_share)
        fn_count = error_count - fp_count
        if fn_count > n_mel or fp_count > n - n_mel:
            raise ValueError("not enough records of the required class to plant errors")
        fn_positions = _pick_errors(np.flatnonzero(is_mel), entropies, fn_count, spec.correlation, rng)
        fp_positions = _pick_errors(np.flatnonzero(~is_mel), entropies, fp_count, spec.correlation, rng)
        is_error = np.zeros(n, dtype=bool)
        is_error[fn_positions] = True
        is_error[fp_positions] = True
    else:
        confidences = rng.uniform(0.5, 1.0, size=n)
        is_error = rng.random(n) >= confidences

    records = []
    for i in range(n):
        true_label = POSITIVE_CLASS if is_mel[i] else 1 - POSITIVE_CLASS
        predicted = true_label if not is_error[i] else 1 - true_label
        p = float(confidences[i])
        probs = (p, 1.0 - p) if predicted == 0 else (1.0 - p, p)
        records.append(
            PredictionRecord(sample_id=f"{name}-{i:05d}", probs=probs, true_label=true_label)
        )

    evalset = EvaluationSet(
        name=name,
        class_names=CLASS_NAMES,
        positive_class=POSITIVE_CLASS,
        records=tuple(records),
        role=role,
    )

    entropy_by_id = {rec.sample_id: shannon_entropy(rec.probs) for rec in records}
    error_ids = [records[i].sample_id for i in np.flatnonzero(is_error)]
    fp_ids = [records[i].sample_id for i in np.flatnonzero(is_error & ~is_mel)]
    fn_ids = [records[i].sample_id for i in np.flatnonzero(is_error & is_mel)]
    bins = [
        {
            "lower": s.lower,
            "upper": s.upper,
            "count": s.count,
            "mean_confidence": s.mean_confidence,
            "accuracy": s.accuracy,
        }
        for s in calibration.compute_bins(evalset)
    ]
    bookkeeping = {
        "n": n,
        "class_counts": {MELANOMA: int(n_mel), NON_MELANOMA: int(n - n_mel)},
        "error_ids": sorted(error_ids),
        "fp_ids": sorted(fp_ids),
        "fn_ids": sorted(fn_ids),
        "entropies": entropy_by_id,
        "bins": bins,
    }
    return evalset, bookkeeping


def generate_fixture(spec: FixtureSpec, seed: int) -> Fixture:
    """Generate validation and test sets plus the ground-truth sidecar."""
    seq = np.random.SeedSequence(seed)
    val_seq, test_seq = seq.spawn(2)
    validation, val_book = _generate_set(
        spec, np.random.default_rng(val_seq), name="val", role="validation"
    )
    test, test_book = _generate_set(spec, np.random.default_rng(test_seq), name="test", role="test")
    sidecar = {
        "spec": asdict(spec),
        "seed": seed,
        "validation": val_book,
        "test": test_book,
    }
    return Fixture(validation=validation, test=test, sidecar=sidecar)


def write_fixture(fixture: Fixture, out_dir: str | Path) -> dict[str, Path]:
    """Write val.csv, test.csv, and sidecar.json under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "validation": out / "val.csv",
        "test": out / "test.csv",
        "sidecar": out / "sidecar.json",
    }
    paths["validation"].write_text(serialize_predictions(fixture.validation, "csv"), encoding="utf-8")
    paths["test"].write_text(serialize_predictions(fixture.test, "csv"), encoding="utf-8")
    paths["sidecar"].write_text(
        json.dumps(fixture.sidecar, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return paths
