"""Row rendering, reduction counts, and leaderboard ranking."""

import json

import pytest
from hypothesis import given, strategies as st

from melselect import fixtures
from melselect.rejection import RejectionPolicy, apply_threshold, evaluate_with_rejection
from melselect.report import (
    UNDEFINED_MARK,
    BeforeAfterRow,
    evaluation_document,
    expand_roster,
    false_diagnosis_reduction,
    format_before_after_row,
    format_percent,
    leaderboard_document,
    load_train_set_roster,
    rank_leaderboard,
    reduction_csv,
)
from melselect.uncertainty import annotate_set

from conftest import make_set


class TestFormatPercent:
    def test_table_convention(self):
        assert format_percent(0.932) == "93.2%"

    def test_undefined(self):
        assert format_percent(None) == UNDEFINED_MARK

    def test_rounding_half_up(self):
        assert format_percent(0.83849) == "83.8%"
        assert format_percent(0.8385) == "83.9%"
        assert format_percent(1.0) == "100.0%"
        assert format_percent(0.0) == "0.0%"

    def test_locale_independent_characters(self):
        rendered = format_percent(0.5125)
        assert rendered == "51.3%"
        assert all(c.isdigit() or c in ".%" for c in rendered)


def sample_row():
    return BeforeAfterRow(
        test_set="fixture",
        network="external",
        train_sets="A-E,G",
        threshold=0.19,
        before={"precision": 0.932, "specificity": 0.892, "sensitivity": 0.98,
                "f1": 0.932, "accuracy": 0.932, "auc_roc": 0.981},
        after={"precision": 0.977, "specificity": 0.961, "sensitivity": 0.98,
               "f1": 0.978, "accuracy": 0.978, "auc_roc": None},
    )


class TestBeforeAfterRow:
    def test_json_round_trip(self):
        row = sample_row()
        again = BeforeAfterRow.from_json(row.to_json())
        assert again == row
        assert BeforeAfterRow.from_json(again.to_json()) == again

    def test_text_rendering(self):
        text = sample_row().to_text()
        assert "precision: 93.2% / 97.7%" in text
        assert f"auc_roc: 98.1% / {UNDEFINED_MARK}" in text

    def test_csv_has_pair_columns(self):
        header, cells = sample_row().to_csv().strip().splitlines()
        assert "precision_before,precision_after" in header
        assert cells.split(",")[0] == "fixture"

    def test_from_evaluation_pair(self):
        s = annotate_set(make_set([(0, (0.9, 0.1)), (1, (0.2, 0.8)), (1, (0.6, 0.4))]))
        result = evaluate_with_rejection(s, RejectionPolicy(threshold=1.0))
        row = format_before_after_row(
            result.before, result.after, test_set="t", threshold=1.0
        )
        assert row.before == row.after
        assert row.before["accuracy"] == pytest.approx(2 / 3)


class TestReduction:
    def test_no_rejection_prevents_nothing(self):
        s = annotate_set(make_set([(0, (0.9, 0.1)), (1, (0.6, 0.4))]))
        part = apply_threshold(s, 1.0)
        summary = false_diagnosis_reduction(s, part)
        assert summary.prevented == 0

    def test_fixture_fp_fn_split_reproduced(self):
        import math

        spec = fixtures.FixtureSpec(
            n=1000, error_rate=0.1, fp_share=0.52, correlation=1.0
        )
        fx = fixtures.generate_fixture(spec, seed=11)
        book = fx.sidecar["test"]
        test = annotate_set(fx.test)
        # threshold just below the least uncertain planted error rejects all
        # of them, so the prevented counts reproduce the planted 52/48 split
        min_error_entropy = min(book["entropies"][sid] for sid in book["error_ids"])
        t = math.nextafter(min_error_entropy, 0.0)
        part = apply_threshold(test, t)
        summary = false_diagnosis_reduction(test, part)
        assert summary.fp_before == len(book["fp_ids"]) == 52
        assert summary.fn_before == len(book["fn_ids"]) == 48
        assert summary.fp_after == 0 and summary.fn_after == 0
        assert summary.prevented == 100

    def test_planted_fn_reduction_fraction(self):
        # 100 planted false negatives; threshold chosen so that the sidecar
        # says 81 of them are rejected
        spec = fixtures.FixtureSpec(
            n=2000, error_rate=0.05, fp_share=0.0, correlation=0.8, melanoma_fraction=0.5
        )
        fx = fixtures.generate_fixture(spec, seed=17)
        book = fx.sidecar["test"]
        assert len(book["fn_ids"]) == 100
        fn_entropies = sorted(
            (book["entropies"][sid] for sid in book["fn_ids"]), reverse=True
        )
        t = (fn_entropies[80] + fn_entropies[81]) / 2  # cut between ranks 81/82
        test = annotate_set(fx.test)
        summary = false_diagnosis_reduction(test, apply_threshold(test, t))
        assert summary.fn_before - summary.fn_after == 81
        assert (summary.fn_before - summary.fn_after) / summary.fn_before == 0.81

    def test_csv_schema(self):
        s = annotate_set(make_set([(0, (0.9, 0.1)), (1, (0.6, 0.4))]))
        summary = false_diagnosis_reduction(s, apply_threshold(s, 1.0))
        text = reduction_csv({"kaggle": summary})
        lines = text.strip().splitlines()
        assert lines[0] == "testset,fp_before,fn_before,fp_after,fn_after"
        assert lines[1] == "kaggle,1,0,1,0"


class TestLeaderboard:
    def test_precision_ordering(self):
        rows = [{"precision": p} for p in (0.823, 0.838, 0.820)]
        ranked = rank_leaderboard(rows, "precision")
        assert [r["precision"] for r in ranked] == [0.838, 0.823, 0.820]

    def test_single_row(self):
        rows = [{"precision": 0.9}]
        assert rank_leaderboard(rows, "precision") == rows

    def test_stable_on_ties(self):
        rows = [{"precision": 0.9, "tag": "first"}, {"precision": 0.9, "tag": "second"}]
        ranked = rank_leaderboard(rows, "precision")
        assert [r["tag"] for r in ranked] == ["first", "second"]

    def test_undefined_sorts_last(self):
        rows = [{"precision": None}, {"precision": 0.5}]
        ranked = rank_leaderboard(rows, "precision")
        assert ranked[0]["precision"] == 0.5

    def test_missing_key_rejected(self):
        with pytest.raises(KeyError):
            rank_leaderboard([{"accuracy": 1.0}], "precision")

    def test_best_per_column_marks(self):
        rows = [
            {"precision": 0.8, "accuracy": 0.9},
            {"precision": 0.9, "accuracy": 0.7},
        ]
        doc = leaderboard_document(rows, "precision")
        assert doc["best_per_column"]["precision"] == 0
        assert doc["best_per_column"]["accuracy"] == 1

    @given(st.lists(st.one_of(st.none(), st.floats(0, 1)), min_size=1, max_size=30))
    def test_is_a_permutation(self, values):
        rows = [{"precision": v, "i": i} for i, v in enumerate(values)]
        ranked = rank_leaderboard(rows, "precision")
        assert sorted(r["i"] for r in ranked) == list(range(len(values)))


class TestRoster:
    def test_roster_letters(self):
        roster = load_train_set_roster()
        assert roster["A"] == "ISIC'16"
        assert roster["J"] == "Kaggle"
        assert len(roster) == 10

    def test_expand_ranges(self):
        names = expand_roster("A-C,G")
        assert names == ["ISIC'16", "ISIC'17", "ISIC'18", "PH2"]


class TestEvaluationDocument:
    def test_document_is_json_serializable_and_consistent(self):
        fx = fixtures.generate_fixture(fixtures.FixtureSpec(n=200), seed=2)
        test = annotate_set(fx.test)
        result = evaluate_with_rejection(test, RejectionPolicy(threshold=0.5))
        doc = evaluation_document(result)
        json.dumps(doc)
        assert doc["counts"]["n"] == 200
        assert doc["counts"]["accepted"] + doc["counts"]["rejected"] == 200
        assert doc["coverage"] == doc["counts"]["accepted"] / 200
        assert doc["before"]["n"] == 200
        assert doc["after"]["n"] == doc["counts"]["accepted"]
        prevented = doc["reduction"]["prevented"]
        assert prevented == (
            doc["reduction"]["fp_before"]
            + doc["reduction"]["fn_before"]
            - doc["reduction"]["fp_after"]
            - doc["reduction"]["fn_after"]
        )
