"""Parsing of prediction files and heterogeneous dataset layouts.

Turns prediction CSV/JSON files into validated :class:`EvaluationSet` objects
and dataset directory trees into :class:`DatasetManifest` objects that share a
common interface regardless of how the source organizes its images. Also
hosts the manifest transforms: label binarization, stratified train/validation
splitting, oversampling plans, and multi-source merging.
"""

from __future__ import annotations

import csv
import io
import json
import math
import random
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

MELANOMA = "Melanoma"
NON_MELANOMA = "NonMelanoma"
BINARY_LABELS = (MELANOMA, NON_MELANOMA)

SPLITS = ("train", "validation", "test")
ROLES = ("train", "validation", "test")

LAYOUT_CSV_LABELS = "csv-labels"
LAYOUT_FOLDER_PER_CLASS = "folder-per-class"
LAYOUT_MERGED = "merged"

PROB_SUM_TOLERANCE = 1e-6

DEFAULT_MELANOMA_SYNONYMS = frozenset({"melanoma", "mel"})


class PredictionFormatError(ValueError):
    """Raised when a prediction file violates the expected schema."""


class ManifestError(ValueError):
    """Raised when a dataset layout or manifest operation is invalid."""


def validate_probabilities(values: Sequence[float], n_classes: int, *, where: str = "") -> tuple[float, ...]:
    """Validate one row of class probabilities.

    Enforces: every value in [0, 1], sum within ``PROB_SUM_TOLERANCE`` of 1,
    and length equal to the class count (at least 2). Violations raise
    ``PredictionFormatError``; probabilities are never renormalized, since a
    bad sum usually means the producer is broken.
    """
    suffix = f" {where}" if where else ""
    probs = tuple(float(v) for v in values)
    if n_classes < 2:
        raise PredictionFormatError(f"need at least 2 classes, got {n_classes}{suffix}")
    if len(probs) != n_classes:
        raise PredictionFormatError(
            f"expected {n_classes} probabilities, got {len(probs)}{suffix}"
        )
    for p in probs:
        if not (0.0 <= p <= 1.0) or math.isnan(p):
            raise PredictionFormatError(f"probability {p!r} outside [0,1]{suffix}")
    total = math.fsum(probs)
    if abs(total - 1.0) > PROB_SUM_TOLERANCE:
        raise PredictionFormatError(
            f"probability sum {total:g} exceeds tolerance{suffix}"
        )
    return probs


@dataclass(frozen=True)
class PredictionRecord:
    """One sample: id, per-class probabilities, optional label and entropy.

    ``true_label`` indexes the owning set's class vocabulary; it is absent for
    inference-only records. ``entropy`` stays None until annotated.
    """

    sample_id: str
    probs: tuple[float, ...]
    true_label: int | None = None
    entropy: float | None = None

    @property
    def predicted_label(self) -> int:
        """Argmax class index; the lowest index wins ties."""
        best = 0
        for i, p in enumerate(self.probs):
            if p > self.probs[best]:
                best = i
        return best

    @property
    def confidence(self) -> float:
        """Maximum class probability."""
        return max(self.probs)


@dataclass(frozen=True)
class EvaluationSet:
    """A named collection of prediction records with a class vocabulary."""

    name: str
    class_names: tuple[str, ...]
    positive_class: int
    records: tuple[PredictionRecord, ...]
    role: str = "test"

    def __post_init__(self) -> None:
        if not (0 <= self.positive_class < len(self.class_names)):
            raise PredictionFormatError(
                f"positive_class {self.positive_class} out of range for "
                f"{len(self.class_names)} classes"
            )
        if self.role not in ROLES:
            raise PredictionFormatError(f"unknown role {self.role!r}")
        seen: set[str] = set()
        for rec in self.records:
            if rec.sample_id in seen:
                raise PredictionFormatError(f"duplicate sample_id {rec.sample_id!r}")
            seen.add(rec.sample_id)
            if rec.true_label is not None and not (0 <= rec.true_label < len(self.class_names)):
                raise PredictionFormatError(
                    f"true_label {rec.true_label} of {rec.sample_id!r} out of range"
                )

    def __len__(self) -> int:
        return len(self.records)

    @property
    def labeled(self) -> bool:
        return all(r.true_label is not None for r in self.records)

    @property
    def annotated(self) -> bool:
        return all(r.entropy is not None for r in self.records)

    def with_records(self, records: Iterable[PredictionRecord]) -> "EvaluationSet":
        return replace(self, records=tuple(records))


def _resolve_positive_class(class_names: Sequence[str], positive_class: str | int | None) -> int:
    if positive_class is None:
        lowered = [c.lower() for c in class_names]
        if MELANOMA.lower() in lowered:
            return lowered.index(MELANOMA.lower())
        raise PredictionFormatError(
            f"no {MELANOMA!r} class among {list(class_names)}; pass positive_class explicitly"
        )
    if isinstance(positive_class, int):
        if not (0 <= positive_class < len(class_names)):
            raise PredictionFormatError(f"positive_class index {positive_class} out of range")
        return positive_class
    for i, name in enumerate(class_names):
        if name.lower() == positive_class.lower():
            return i
    raise PredictionFormatError(f"positive_class {positive_class!r} not among {list(class_names)}")


def _parse_predictions_csv(
    text: str, *, name: str, role: str, positive_class: str | int | None
) -> EvaluationSet:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise PredictionFormatError("empty prediction file") from None
    header = [h.strip() for h in header]
    if len(header) < 4 or header[0] != "sample_id" or header[1] != "true_label":
        raise PredictionFormatError(
            "malformed header: expected 'sample_id,true_label,p_<class>,...', "
            f"got {','.join(header)!r}"
        )
    class_names = []
    for col in header[2:]:
        if not col.startswith("p_") or len(col) <= 2:
            raise PredictionFormatError(f"malformed header: probability column {col!r}")
        class_names.append(col[2:])
    n_classes = len(class_names)

    records = []
    for row_no, row in enumerate(reader, start=1):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 2 + n_classes:
            raise PredictionFormatError(
                f"expected {2 + n_classes} fields at row {row_no}, got {len(row)}"
            )
        sample_id = row[0].strip()
        if not sample_id:
            raise PredictionFormatError(f"empty sample_id at row {row_no}")
        label_text = row[1].strip()
        if label_text:
            if label_text not in class_names:
                raise PredictionFormatError(
                    f"unknown label {label_text!r} at row {row_no}"
                )
            true_label = class_names.index(label_text)
        else:
            true_label = None
        try:
            values = [float(v) for v in row[2:]]
        except ValueError as exc:
            raise PredictionFormatError(f"bad probability at row {row_no}: {exc}") from None
        probs = validate_probabilities(values, n_classes, where=f"at row {row_no}")
        records.append(PredictionRecord(sample_id=sample_id, probs=probs, true_label=true_label))

    return EvaluationSet(
        name=name,
        class_names=tuple(class_names),
        positive_class=_resolve_positive_class(class_names, positive_class),
        records=tuple(records),
        role=role,
    )


def _parse_predictions_json(
    text: str, *, name: str, role: str, positive_class: str | int | None
) -> EvaluationSet:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PredictionFormatError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict) or "class_names" not in doc or "records" not in doc:
        raise PredictionFormatError("prediction JSON must carry 'class_names' and 'records'")
    class_names = [str(c) for c in doc["class_names"]]
    if len(class_names) < 2:
        raise PredictionFormatError("need at least 2 class names")
    if positive_class is None:
        positive_class = doc.get("positive_class")
    n_classes = len(class_names)

    records = []
    for row_no, item in enumerate(doc["records"], start=1):
        if not isinstance(item, dict) or "sample_id" not in item or "probs" not in item:
            raise PredictionFormatError(f"record {row_no} missing sample_id/probs")
        probs = validate_probabilities(item["probs"], n_classes, where=f"at row {row_no}")
        raw_label = item.get("true_label")
        if raw_label is None or raw_label == "":
            true_label = None
        elif isinstance(raw_label, str):
            if raw_label not in class_names:
                raise PredictionFormatError(f"unknown label {raw_label!r} at row {row_no}")
            true_label = class_names.index(raw_label)
        else:
            true_label = int(raw_label)
            if not (0 <= true_label < n_classes):
                raise PredictionFormatError(f"label index {true_label} at row {row_no} out of range")
        entropy = item.get("entropy")
        records.append(
            PredictionRecord(
                sample_id=str(item["sample_id"]),
                probs=probs,
                true_label=true_label,
                entropy=None if entropy is None else float(entropy),
            )
        )

    return EvaluationSet(
        name=str(doc.get("name", name)),
        class_names=tuple(class_names),
        positive_class=_resolve_positive_class(class_names, positive_class),
        records=tuple(records),
        role=str(doc.get("role", role)),
    )


def parse_predictions(
    data: bytes | str,
    format: str = "csv",
    *,
    name: str = "predictions",
    role: str = "test",
    positive_class: str | int | None = None,
) -> EvaluationSet:
    """Parse a prediction file (CSV or JSON) into a validated EvaluationSet.

    CSV schema: header ``sample_id,true_label,p_<class0>,p_<class1>[,...]``;
    ``true_label`` may be empty for inference-only rows. JSON schema: object
    with ``class_names``, ``positive_class`` and ``records``. Rows violating
    the probability invariants are rejected with their (1-based, header
    excluded) row number.
    """
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    if format == "csv":
        return _parse_predictions_csv(text, name=name, role=role, positive_class=positive_class)
    if format == "json":
        return _parse_predictions_json(text, name=name, role=role, positive_class=positive_class)
    raise PredictionFormatError(f"unknown prediction format {format!r}")


def serialize_predictions(evalset: EvaluationSet, format: str = "csv") -> str:
    """Serialize an EvaluationSet back to CSV or JSON text.

    Floats are written with ``repr`` so parse -> serialize -> parse
    round-trips to an equal set (CSV drops entropy annotations by schema;
    JSON keeps them).
    """
    if format == "csv":
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["sample_id", "true_label"] + [f"p_{c}" for c in evalset.class_names])
        for rec in evalset.records:
            label = "" if rec.true_label is None else evalset.class_names[rec.true_label]
            writer.writerow([rec.sample_id, label] + [repr(p) for p in rec.probs])
        return out.getvalue()
    if format == "json":
        doc = {
            "name": evalset.name,
            "class_names": list(evalset.class_names),
            "positive_class": evalset.positive_class,
            "role": evalset.role,
            "records": [
                {
                    "sample_id": rec.sample_id,
                    "true_label": rec.true_label,
                    "probs": list(rec.probs),
                    **({"entropy": rec.entropy} if rec.entropy is not None else {}),
                }
                for rec in evalset.records
            ],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    raise PredictionFormatError(f"unknown prediction format {format!r}")


# --------------------------------------------------------------------------
# Dataset manifests


@dataclass(frozen=True)
class ManifestEntry:
    entry_id: str
    path: str
    raw_label: str
    binary_label: str | None
    split: str


@dataclass(frozen=True)
class DatasetManifest:
    """Harmonized listing of image entries from one source layout."""

    source_name: str
    layout: str
    entries: tuple[ManifestEntry, ...]

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for e in self.entries:
            if e.entry_id in seen:
                raise ManifestError(f"duplicate entry_id {e.entry_id!r}")
            seen.add(e.entry_id)
            if e.split not in SPLITS:
                raise ManifestError(f"entry {e.entry_id!r} has unknown split {e.split!r}")
            if e.binary_label is not None and e.binary_label not in BINARY_LABELS:
                raise ManifestError(
                    f"entry {e.entry_id!r} has unknown binary label {e.binary_label!r}"
                )

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def binarized(self) -> bool:
        return all(e.binary_label is not None for e in self.entries)

    def class_counts(self, split: str | None = None) -> dict[str, int]:
        counts = {MELANOMA: 0, NON_MELANOMA: 0}
        for e in self.entries:
            if split is not None and e.split != split:
                continue
            if e.binary_label is not None:
                counts[e.binary_label] += 1
        return counts


@dataclass(frozen=True)
class LayoutConfig:
    """Descriptor for one source layout (``{kind, label_column?, path_column?}``)."""

    kind: str
    label_column: str | None = None
    path_column: str | None = None
    split_column: str | None = None
    labels_file: str = "labels.csv"

    @classmethod
    def from_mapping(cls, doc: Mapping[str, object]) -> "LayoutConfig":
        kind = str(doc.get("kind", ""))
        if kind not in (LAYOUT_CSV_LABELS, LAYOUT_FOLDER_PER_CLASS):
            raise ManifestError(f"unknown layout kind {kind!r}")
        return cls(
            kind=kind,
            label_column=doc.get("label_column"),  # type: ignore[arg-type]
            path_column=doc.get("path_column"),  # type: ignore[arg-type]
            split_column=doc.get("split_column"),  # type: ignore[arg-type]
            labels_file=str(doc.get("labels_file", "labels.csv")),
        )


def load_layout_config(path: str | Path) -> LayoutConfig:
    """Load a layout descriptor from a TOML or JSON file."""
    path = Path(path)
    raw = path.read_bytes()
    if path.suffix.lower() == ".toml":
        try:
            import tomllib  # type: ignore[import-not-found]
        except ModuleNotFoundError:
            import tomli as tomllib  # type: ignore[no-redef]
        doc = tomllib.loads(raw.decode("utf-8"))
    else:
        doc = json.loads(raw.decode("utf-8"))
    return LayoutConfig.from_mapping(doc)


def parse_dataset_layout(root: str | Path, config: LayoutConfig, *, source_name: str) -> DatasetManifest:
    """Scan one dataset tree into a manifest; raw labels kept verbatim."""
    root = Path(root)
    if config.kind == LAYOUT_FOLDER_PER_CLASS:
        class_dirs = sorted(p for p in root.iterdir() if p.is_dir())
        if not class_dirs:
            raise ManifestError(f"folder layout at {root} has zero class directories")
        entries = []
        for class_dir in class_dirs:
            for file in sorted(p for p in class_dir.rglob("*") if p.is_file()):
                rel = file.relative_to(root).as_posix()
                entries.append(
                    ManifestEntry(
                        entry_id=rel,
                        path=rel,
                        raw_label=class_dir.name,
                        binary_label=None,
                        split="train",
                    )
                )
        return DatasetManifest(source_name=source_name, layout=config.kind, entries=tuple(entries))

    if config.kind == LAYOUT_CSV_LABELS:
        if not config.label_column or not config.path_column:
            raise ManifestError("csv-labels layout needs label_column and path_column")
        labels_path = root / config.labels_file
        if not labels_path.is_file():
            raise ManifestError(f"labels file {labels_path} not found")
        with labels_path.open(newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or config.label_column not in reader.fieldnames:
                raise ManifestError(f"label column {config.label_column!r} missing from CSV")
            if config.path_column not in reader.fieldnames:
                raise ManifestError(f"path column {config.path_column!r} missing from CSV")
            entries = []
            for row in reader:
                rel = row[config.path_column].strip()
                if not (root / rel).is_file():
                    raise ManifestError(f"CSV references missing file {rel!r}")
                split = "train"
                if config.split_column and row.get(config.split_column, "").strip():
                    split = row[config.split_column].strip()
                entries.append(
                    ManifestEntry(
                        entry_id=rel,
                        path=rel,
                        raw_label=row[config.label_column],
                        binary_label=None,
                        split=split,
                    )
                )
        return DatasetManifest(source_name=source_name, layout=config.kind, entries=tuple(entries))

    raise ManifestError(f"unknown layout kind {config.kind!r}")


def binarize_labels(
    manifest: DatasetManifest,
    melanoma_synonyms: Iterable[str] = DEFAULT_MELANOMA_SYNONYMS,
    strict: bool = False,
    *,
    known_labels: Iterable[str] | None = None,
) -> DatasetManifest:
    """Map raw labels onto Melanoma / NonMelanoma.

    Matching is case-insensitive. Anything not matching a melanoma synonym
    becomes NonMelanoma; in strict mode a raw label outside ``known_labels``
    is an error instead. Idempotent.
    """
    synonyms = {s.lower() for s in melanoma_synonyms}
    if not synonyms:
        raise ManifestError("melanoma synonym set must be non-empty")
    known = None
    if strict:
        if known_labels is None:
            raise ManifestError("strict mode needs a known-label set")
        known = {k.lower() for k in known_labels} | synonyms

    entries = []
    for e in manifest.entries:
        raw = e.raw_label.strip().lower()
        if known is not None and raw not in known:
            raise ManifestError(f"unknown raw label {e.raw_label!r} on entry {e.entry_id!r}")
        label = MELANOMA if raw in synonyms else NON_MELANOMA
        entries.append(replace(e, binary_label=label))
    return replace(manifest, entries=tuple(entries))


def _round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def make_split(manifest: DatasetManifest, ratio: float, seed: int) -> DatasetManifest:
    """Carve a validation split out of an all-train manifest.

    Deterministic given the seed: entries are sorted by entry_id, shuffled by
    a seeded PRNG, then per binary class the first round(ratio * class_n)
    stay train and the remainder become validation (stratified; half rounds
    up).
    """
    if not (0.0 < ratio < 1.0):
        raise ManifestError(f"split ratio must be in (0,1), got {ratio}")
    if not manifest.binarized:
        raise ManifestError("manifest must be binarized before splitting")
    if any(e.split != "train" for e in manifest.entries):
        raise ManifestError("make_split expects a manifest with only train entries")

    counts = manifest.class_counts()
    for label in BINARY_LABELS:
        if counts[label] == 0:
            raise ManifestError(f"{label} class empty; cannot stratify")

    shuffled = sorted(manifest.entries, key=lambda e: e.entry_id)
    random.Random(seed).shuffle(shuffled)

    quota = {label: _round_half_up(ratio * counts[label]) for label in BINARY_LABELS}
    taken = {label: 0 for label in BINARY_LABELS}
    assignment: dict[str, str] = {}
    for e in shuffled:
        label = e.binary_label
        assert label is not None
        if taken[label] < quota[label]:
            assignment[e.entry_id] = "train"
            taken[label] += 1
        else:
            assignment[e.entry_id] = "validation"

    entries = tuple(replace(e, split=assignment[e.entry_id]) for e in manifest.entries)
    return replace(manifest, entries=entries)


@dataclass(frozen=True)
class OversamplePlan:
    """Duplication counts per entry_id (whole-copy oversampling, counts >= 1)."""

    counts: tuple[tuple[str, int], ...]

    def as_dict(self) -> dict[str, int]:
        return dict(self.counts)

    def total(self) -> int:
        return sum(c for _, c in self.counts)


def build_oversample_plan(manifest: DatasetManifest) -> OversamplePlan:
    """Balance train-split classes by whole-copy duplication.

    Each minority-class entry gets floor(majority_n / minority_n) copies,
    plus one extra for the first (majority_n mod minority_n) entries in
    entry_id order; majority entries keep count 1. Totals come out exactly
    equal.
    """
    if not manifest.binarized:
        raise ManifestError("manifest must be binarized before oversampling")
    train = [e for e in manifest.entries if e.split == "train"]
    if not train:
        raise ManifestError("train split is empty")
    counts = {MELANOMA: 0, NON_MELANOMA: 0}
    for e in train:
        counts[e.binary_label] += 1  # type: ignore[index]
    for label in BINARY_LABELS:
        if counts[label] == 0:
            raise ManifestError(f"{label} class empty in train split")

    minority = min(BINARY_LABELS, key=lambda l: counts[l])
    majority_n = max(counts.values())
    minority_n = counts[minority]
    base = majority_n // minority_n
    extras = majority_n % minority_n

    minority_ids = sorted(e.entry_id for e in train if e.binary_label == minority)
    extra_ids = set(minority_ids[:extras])

    plan = []
    for e in sorted(train, key=lambda e: e.entry_id):
        if e.binary_label == minority:
            plan.append((e.entry_id, base + (1 if e.entry_id in extra_ids else 0)))
        else:
            plan.append((e.entry_id, 1))
    return OversamplePlan(counts=tuple(plan))


def merge_manifests(manifests: Sequence[DatasetManifest]) -> DatasetManifest:
    """Merge binarized manifests, namespacing ids as ``source_name/entry_id``."""
    if not manifests:
        raise ManifestError("nothing to merge")
    seen_sources: set[str] = set()
    entries = []
    for m in manifests:
        if m.source_name in seen_sources:
            raise ManifestError(f"duplicate source_name {m.source_name!r}")
        seen_sources.add(m.source_name)
        if not m.binarized:
            raise ManifestError(f"manifest {m.source_name!r} is not binarized")
        for e in m.entries:
            entries.append(replace(e, entry_id=f"{m.source_name}/{e.entry_id}"))
    return DatasetManifest(source_name="merged", layout=LAYOUT_MERGED, entries=tuple(entries))


def manifest_to_json(manifest: DatasetManifest) -> str:
    doc = {
        "source_name": manifest.source_name,
        "layout": manifest.layout,
        "entries": [
            {
                "entry_id": e.entry_id,
                "path": e.path,
                "raw_label": e.raw_label,
                "binary_label": e.binary_label,
                "split": e.split,
            }
            for e in manifest.entries
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def manifest_from_json(text: str) -> DatasetManifest:
    doc = json.loads(text)
    entries = tuple(
        ManifestEntry(
            entry_id=e["entry_id"],
            path=e["path"],
            raw_label=e["raw_label"],
            binary_label=e.get("binary_label"),
            split=e["split"],
        )
        for e in doc["entries"]
    )
    return DatasetManifest(source_name=doc["source_name"], layout=doc["layout"], entries=entries)
