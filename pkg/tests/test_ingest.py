"""Prediction parsing, dataset layouts, and manifest transforms."""

import json

import pytest
from hypothesis import given, strategies as st

from melselect import fixtures
from melselect.ingest import (
    MELANOMA,
    NON_MELANOMA,
    DatasetManifest,
    LayoutConfig,
    ManifestEntry,
    ManifestError,
    PredictionFormatError,
    binarize_labels,
    build_oversample_plan,
    make_split,
    merge_manifests,
    parse_dataset_layout,
    parse_predictions,
    serialize_predictions,
)

from conftest import labeled_sets, manifests

MINIMAL_CSV = (
    "sample_id,true_label,p_Melanoma,p_NonMelanoma\n"
    "s1,Melanoma,0.9,0.1\n"
    "s2,NonMelanoma,0.2,0.8\n"
)


class TestParsePredictions:
    def test_minimal_csv(self):
        s = parse_predictions(MINIMAL_CSV, "csv")
        assert len(s) == 2
        assert s.class_names == ("Melanoma", "NonMelanoma")
        assert s.positive_class == 0
        assert s.records[0].true_label == 0
        assert s.records[1].probs == (0.2, 0.8)

    def test_bad_probability_sum_reports_row(self):
        text = MINIMAL_CSV + "s3,Melanoma,0.6,0.6\n"
        with pytest.raises(PredictionFormatError, match=r"probability sum 1.2 .* at row 3"):
            parse_predictions(text, "csv")

    def test_generated_file_counts_match_sidecar(self):
        spec = fixtures.FixtureSpec(n=1000, melanoma_fraction=0.25)
        fx = fixtures.generate_fixture(spec, seed=7)
        text = serialize_predictions(fx.test, "csv")
        parsed = parse_predictions(text, "csv")
        expected = fx.sidecar["test"]["class_counts"]
        counts = {MELANOMA: 0, NON_MELANOMA: 0}
        for rec in parsed.records:
            counts[parsed.class_names[rec.true_label]] += 1
        assert counts == expected

    def test_malformed_header(self):
        with pytest.raises(PredictionFormatError, match="malformed header"):
            parse_predictions("id,label,p_a,p_b\nx,a,0.5,0.5\n", "csv")

    def test_duplicate_sample_id(self):
        text = MINIMAL_CSV + "s1,Melanoma,0.8,0.2\n"
        with pytest.raises(PredictionFormatError, match="duplicate sample_id"):
            parse_predictions(text, "csv")

    def test_unknown_label(self):
        text = MINIMAL_CSV + "s3,Nevus,0.5,0.5\n"
        with pytest.raises(PredictionFormatError, match="unknown label 'Nevus'"):
            parse_predictions(text, "csv")

    def test_probability_outside_unit_interval(self):
        text = "sample_id,true_label,p_Melanoma,p_NonMelanoma\ns1,Melanoma,1.2,-0.2\n"
        with pytest.raises(PredictionFormatError, match="outside"):
            parse_predictions(text, "csv")

    def test_empty_true_label_allowed(self):
        text = "sample_id,true_label,p_Melanoma,p_NonMelanoma\ns1,,0.9,0.1\n"
        s = parse_predictions(text, "csv")
        assert s.records[0].true_label is None

    def test_json_format(self):
        doc = {
            "class_names": ["Melanoma", "NonMelanoma"],
            "positive_class": 0,
            "records": [
                {"sample_id": "a", "true_label": "Melanoma", "probs": [0.7, 0.3]},
                {"sample_id": "b", "true_label": 1, "probs": [0.1, 0.9]},
            ],
        }
        s = parse_predictions(json.dumps(doc), "json")
        assert [r.true_label for r in s.records] == [0, 1]

    @given(labeled_sets())
    def test_round_trip_csv(self, s):
        again = parse_predictions(serialize_predictions(s, "csv"), "csv", name=s.name, role=s.role)
        assert again == s

    @given(labeled_sets())
    def test_round_trip_json(self, s):
        again = parse_predictions(serialize_predictions(s, "json"), "json")
        assert again == s


class TestParseDatasetLayout:
    def test_folder_layout(self, tmp_path):
        (tmp_path / "melanoma").mkdir()
        (tmp_path / "nevus").mkdir()
        (tmp_path / "melanoma" / "a.jpg").write_bytes(b"")
        (tmp_path / "nevus" / "b.jpg").write_bytes(b"")
        m = parse_dataset_layout(tmp_path, LayoutConfig(kind="folder-per-class"), source_name="d")
        assert len(m) == 2
        assert sorted(e.raw_label for e in m.entries) == ["melanoma", "nevus"]

    def test_csv_layout_row_order(self, tmp_path):
        rows = [("img0.png", "MEL"), ("img1.png", "NV"), ("img2.png", "BCC"),
                ("img3.png", "MEL"), ("img4.png", "NV")]
        lines = ["file,dx"] + [f"{p},{l}" for p, l in rows]
        (tmp_path / "labels.csv").write_text("\n".join(lines) + "\n")
        for p, _ in rows:
            (tmp_path / p).write_bytes(b"")
        config = LayoutConfig(kind="csv-labels", label_column="dx", path_column="file")
        m = parse_dataset_layout(tmp_path, config, source_name="d")
        assert [e.entry_id for e in m.entries] == [p for p, _ in rows]
        assert [e.raw_label for e in m.entries] == [l for _, l in rows]

    def test_mixed_tree_counts_match_walk(self, tmp_path):
        import random

        rng = random.Random(11)
        per_class = {"mel": 0, "nv": 0, "bkl": 0}
        for cls in per_class:
            (tmp_path / cls).mkdir()
        for i in range(40):
            cls = rng.choice(list(per_class))
            (tmp_path / cls / f"f{i:03d}.jpg").write_bytes(b"")
            per_class[cls] += 1
        m = parse_dataset_layout(tmp_path, LayoutConfig(kind="folder-per-class"), source_name="d")
        assert len(m) == 40
        # independent recount straight off the filesystem
        walked = {cls: len(list((tmp_path / cls).glob("*.jpg"))) for cls in per_class}
        assert walked == per_class
        counted = {}
        for e in m.entries:
            counted[e.raw_label] = counted.get(e.raw_label, 0) + 1
        assert counted == per_class

    def test_csv_missing_file(self, tmp_path):
        (tmp_path / "labels.csv").write_text("file,dx\nghost.png,MEL\n")
        config = LayoutConfig(kind="csv-labels", label_column="dx", path_column="file")
        with pytest.raises(ManifestError, match="missing file"):
            parse_dataset_layout(tmp_path, config, source_name="d")

    def test_toml_descriptor(self, tmp_path):
        from melselect.ingest import load_layout_config

        descriptor = tmp_path / "layout.toml"
        descriptor.write_text('kind = "csv-labels"\nlabel_column = "dx"\npath_column = "file"\n')
        config = load_layout_config(descriptor)
        assert config.kind == "csv-labels"
        assert config.label_column == "dx"

    def test_json_descriptor_unknown_kind(self, tmp_path):
        descriptor = tmp_path / "layout.json"
        descriptor.write_text('{"kind": "zip-archive"}')
        from melselect.ingest import load_layout_config

        with pytest.raises(ManifestError, match="unknown layout kind"):
            load_layout_config(descriptor)

    def test_zero_class_directories(self, tmp_path):
        with pytest.raises(ManifestError, match="zero class directories"):
            parse_dataset_layout(tmp_path, LayoutConfig(kind="folder-per-class"), source_name="d")


def manifest_of(raw_labels, *, source="src", split="train"):
    entries = tuple(
        ManifestEntry(f"e{i:03d}", f"e{i:03d}", raw, None, split)
        for i, raw in enumerate(raw_labels)
    )
    return DatasetManifest(source_name=source, layout="folder-per-class", entries=entries)


class TestBinarize:
    def test_synonym_matching(self):
        m = binarize_labels(manifest_of(["MEL", "NV", "BCC"]), {"mel", "melanoma"})
        assert [e.binary_label for e in m.entries] == [MELANOMA, NON_MELANOMA, NON_MELANOMA]

    def test_all_melanoma(self):
        m = binarize_labels(manifest_of(["melanoma", "melanoma"]), {"melanoma"})
        assert all(e.binary_label == MELANOMA for e in m.entries)

    def test_strict_unknown_label_names_entry(self):
        with pytest.raises(ManifestError, match="e001"):
            binarize_labels(
                manifest_of(["mel", "???"]), {"mel"}, strict=True, known_labels={"mel", "nv"}
            )

    def test_empty_synonyms_rejected(self):
        with pytest.raises(ManifestError, match="non-empty"):
            binarize_labels(manifest_of(["mel"]), set())

    @given(manifests(binarized=False))
    def test_idempotent(self, m):
        once = binarize_labels(m, {"mel"})
        twice = binarize_labels(once, {"mel"})
        assert once == twice


class TestMakeSplit:
    def test_per_class_rounding(self):
        m = binarize_labels(manifest_of(["mel"] * 2 + ["nv"] * 8), {"mel"})
        out = make_split(m, 0.8, seed=3)
        train = [e for e in out.entries if e.split == "train"]
        val = [e for e in out.entries if e.split == "validation"]
        assert len(train) == 8 and len(val) == 2
        assert sum(e.binary_label == MELANOMA for e in train) == 2
        assert all(e.binary_label == NON_MELANOMA for e in val)

    def test_single_class_is_an_error(self):
        m = binarize_labels(manifest_of(["nv"] * 100), {"mel"})
        with pytest.raises(ManifestError, match="Melanoma class empty"):
            make_split(m, 0.8, seed=0)

    def test_deterministic(self):
        m = binarize_labels(manifest_of(["mel"] * 5 + ["nv"] * 15), {"mel"})
        a = make_split(m, 0.8, seed=42)
        b = make_split(m, 0.8, seed=42)
        assert a == b

    def test_different_seed_can_differ(self):
        m = binarize_labels(manifest_of(["mel"] * 10 + ["nv"] * 30), {"mel"})
        outcomes = {
            tuple(e.split for e in make_split(m, 0.8, seed=s).entries) for s in range(5)
        }
        assert len(outcomes) > 1

    @given(manifests(), st.integers(0, 2**31), st.floats(0.05, 0.95))
    def test_partition_property(self, m, seed, ratio):
        counts = m.class_counts()
        if counts[MELANOMA] == 0 or counts[NON_MELANOMA] == 0:
            with pytest.raises(ManifestError):
                make_split(m, ratio, seed)
            return
        out = make_split(m, ratio, seed)
        assert {e.entry_id for e in out.entries} == {e.entry_id for e in m.entries}
        splits = {e.split for e in out.entries}
        assert splits <= {"train", "validation"}
        for label in (MELANOMA, NON_MELANOMA):
            class_n = counts[label]
            train_n = sum(
                1 for e in out.entries if e.binary_label == label and e.split == "train"
            )
            assert train_n == int(ratio * class_n + 0.5)


class TestOversample:
    def test_exact_division(self):
        m = binarize_labels(manifest_of(["nv"] * 6 + ["mel"] * 2), {"mel"})
        plan = build_oversample_plan(m).as_dict()
        mel_ids = [e.entry_id for e in m.entries if e.binary_label == MELANOMA]
        assert all(plan[i] == 3 for i in mel_ids)
        assert plan["e000"] == 1
        assert sum(plan.values()) == 12

    def test_balanced_identity(self):
        m = binarize_labels(manifest_of(["nv"] * 5 + ["mel"] * 5), {"mel"})
        assert all(c == 1 for c in build_oversample_plan(m).as_dict().values())

    def test_remainder_goes_to_first_ids(self):
        m = binarize_labels(manifest_of(["nv"] * 7 + ["mel"] * 3), {"mel"})
        plan = build_oversample_plan(m).as_dict()
        mel_ids = sorted(e.entry_id for e in m.entries if e.binary_label == MELANOMA)
        assert [plan[i] for i in mel_ids] == [3, 2, 2]

    def test_empty_train_split(self):
        entries = (ManifestEntry("a", "a", "mel", MELANOMA, "test"),)
        m = DatasetManifest(source_name="s", layout="folder-per-class", entries=entries)
        with pytest.raises(ManifestError, match="train split is empty"):
            build_oversample_plan(m)

    @given(st.integers(1, 40), st.integers(1, 40))
    def test_totals_balance_exactly(self, n_mel, n_nv):
        m = binarize_labels(manifest_of(["mel"] * n_mel + ["nv"] * n_nv), {"mel"})
        plan = build_oversample_plan(m).as_dict()
        totals = {MELANOMA: 0, NON_MELANOMA: 0}
        for e in m.entries:
            totals[e.binary_label or ""] += plan[e.entry_id]
        assert totals[MELANOMA] == totals[NON_MELANOMA] == max(n_mel, n_nv)
        assert all(c >= 1 for c in plan.values())


class TestMerge:
    def test_two_sources(self):
        a = binarize_labels(manifest_of(["mel"] * 3, source="A"), {"mel"})
        b = binarize_labels(manifest_of(["nv"] * 2, source="B"), {"mel"})
        merged = merge_manifests([a, b])
        assert len(merged) == 5
        assert all(e.entry_id.startswith(("A/", "B/")) for e in merged.entries)

    def test_identity_up_to_namespacing(self):
        a = binarize_labels(manifest_of(["mel", "nv"], source="A"), {"mel"})
        merged = merge_manifests([a])
        assert [e.entry_id for e in merged.entries] == ["A/e000", "A/e001"]
        assert [e.binary_label for e in merged.entries] == [
            e.binary_label for e in a.entries
        ]

    def test_ten_source_roster_sum(self):
        import random

        rng = random.Random(5)
        sources = []
        sizes = []
        for letter in "ABCDEFGHIJ":
            size = rng.randint(1, 50)
            sizes.append(size)
            sources.append(
                binarize_labels(
                    manifest_of(rng.choices(["mel", "nv"], k=size), source=letter), {"mel"}
                )
            )
        merged = merge_manifests(sources)
        assert len(merged) == sum(sizes)

    def test_duplicate_source_name(self):
        a = binarize_labels(manifest_of(["mel"], source="A"), {"mel"})
        with pytest.raises(ManifestError, match="duplicate source_name"):
            merge_manifests([a, a])

    def test_unbinarized_rejected(self):
        with pytest.raises(ManifestError, match="not binarized"):
            merge_manifests([manifest_of(["mel"], source="A")])

    @given(st.lists(st.integers(1, 20), min_size=1, max_size=8))
    def test_size_additivity_and_unique_ids(self, sizes):
        sources = [
            binarize_labels(manifest_of(["mel"] * size, source=f"S{i}"), {"mel"})
            for i, size in enumerate(sizes)
        ]
        merged = merge_manifests(sources)
        assert len(merged) == sum(sizes)
        ids = [e.entry_id for e in merged.entries]
        assert len(set(ids)) == len(ids)
