"""Shared fixtures and hypothesis strategies."""

import os
from datetime import timedelta

import pytest
from hypothesis import HealthCheck, settings, strategies as st

from melselect.ingest import (
    MELANOMA,
    NON_MELANOMA,
    DatasetManifest,
    EvaluationSet,
    ManifestEntry,
    PredictionRecord,
)

settings.register_profile(
    "ci", deadline=timedelta(milliseconds=2000), suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("dev", max_examples=25)
settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "ci"))

BINARY_CLASSES = (MELANOMA, NON_MELANOMA)


def make_set(rows, *, class_names=BINARY_CLASSES, positive=0, name="t", role="test"):
    """Build an EvaluationSet from (true_label, probs) pairs."""
    records = tuple(
        PredictionRecord(sample_id=f"s{i:05d}", probs=tuple(probs), true_label=label)
        for i, (label, probs) in enumerate(rows)
    )
    return EvaluationSet(
        name=name, class_names=class_names, positive_class=positive, records=records, role=role
    )


@st.composite
def binary_rows(draw, min_size=1, max_size=60):
    """(true_label, (p, 1-p)) rows; positive-class probability on a coarse grid
    so ties between scores actually happen."""
    n = draw(st.integers(min_size, max_size))
    rows = []
    for _ in range(n):
        label = draw(st.integers(0, 1))
        p = draw(st.integers(0, 20)) / 20.0
        rows.append((label, (p, 1.0 - p)))
    return rows


@st.composite
def labeled_sets(draw, min_size=1, max_size=60):
    return make_set(draw(binary_rows(min_size, max_size)))


@st.composite
def manifests(draw, source="src", binarized=True):
    n = draw(st.integers(1, 30))
    labels = draw(st.lists(st.sampled_from(["mel", "nv", "bcc"]), min_size=n, max_size=n))
    entries = tuple(
        ManifestEntry(
            entry_id=f"e{i:04d}.jpg",
            path=f"e{i:04d}.jpg",
            raw_label=raw,
            binary_label=(MELANOMA if raw == "mel" else NON_MELANOMA) if binarized else None,
            split="train",
        )
        for i, raw in enumerate(labels)
    )
    return DatasetManifest(source_name=source, layout="folder-per-class", entries=entries)


@pytest.fixture
def two_bin_set():
    """Four records over two confidence bins: ECE 0.05 by hand."""
    return make_set(
        [
            (0, (0.95, 0.05)),
            (0, (0.95, 0.05)),
            (0, (0.55, 0.45)),
            (1, (0.55, 0.45)),
        ]
    )
