"""Metric arithmetic, nested LOPO validation and report documents."""

import json

import numpy as np
import pytest

from swayrater import (
    ConfusionMatrix,
    CVReport,
    DataError,
    Dataset,
    EvalConfig,
    accuracy,
    confusion_matrix,
    dataset_features,
    evaluate_dataset,
    evaluate_three_class,
    group_to_three,
    load_report_document,
    lopo_folds,
    macro_f1,
    per_class_metrics,
    rater_agreement,
    remap_confusion,
    render_document,
    report_from_dict,
    run_nested_lopo,
    tune_C,
    write_report_document,
)
from swayrater.evaluation import render_confusion, svm_vs_self_t_test

from conftest import make_set, make_trial

FAST = EvalConfig(tolerance=1e-5)
TINY_GRID = (0.1, 10.0)


class TestConfusionMatrix:
    def test_counts_land_on_truth_rows(self):
        cm = confusion_matrix([1, 1, 2], [1, 2, 2], classes=(1, 2))
        assert cm.counts.tolist() == [[1, 1], [0, 1]]
        assert cm.total == 3

    def test_rejects_unknown_labels(self):
        with pytest.raises(ValueError, match="unknown truth"):
            confusion_matrix([3], [1], classes=(1, 2))
        with pytest.raises(ValueError, match="unknown predicted"):
            confusion_matrix([1], [3], classes=(1, 2))

    def test_rejects_length_mismatch(self):
        with pytest.raises(ValueError, match="length mismatch"):
            confusion_matrix([1, 2], [1], classes=(1, 2))

    def test_validates_shape_and_sign(self):
        with pytest.raises(ValueError):
            ConfusionMatrix(classes=(1, 2), counts=np.zeros((2, 3)))
        with pytest.raises(ValueError):
            ConfusionMatrix(classes=(1,), counts=np.array([[-1]]))


class TestMetricConventions:
    def test_hand_computed_values(self):
        cm = ConfusionMatrix(classes=(1, 2),
                             counts=np.array([[8, 2], [1, 4]]))
        m = per_class_metrics(cm)
        assert m[1].precision == pytest.approx(8 / 9)
        assert m[1].recall == pytest.approx(8 / 10)
        assert m[1].support == 10
        assert m[2].f1 == pytest.approx(2 * (4 / 6) * (4 / 5)
                                        / (4 / 6 + 4 / 5))
        assert accuracy(cm) == pytest.approx(12 / 15)

    def test_zero_denominators_mean_zero(self):
        # class 2 never predicted, class 3 never true
        cm = ConfusionMatrix(
            classes=(1, 2, 3),
            counts=np.array([[2, 0, 1], [1, 0, 0], [0, 0, 0]]))
        m = per_class_metrics(cm)
        assert m[2].precision == 0.0 and m[2].f1 == 0.0
        assert m[3].recall == 0.0 and m[3].f1 == 0.0

    def test_macro_f1_skips_fully_absent_classes(self):
        counts = np.zeros((3, 3), dtype=int)
        counts[0, 0] = 4
        counts[1, 0] = 2
        cm = ConfusionMatrix(classes=(1, 2, 3), counts=counts)
        m = per_class_metrics(cm)
        # class 3 occurs nowhere, so the mean runs over classes 1 and 2
        assert macro_f1(cm) == pytest.approx((m[1].f1 + m[2].f1) / 2.0)

    def test_empty_matrix_rejected(self):
        cm = ConfusionMatrix(classes=(1, 2), counts=np.zeros((2, 2)))
        with pytest.raises(ValueError):
            accuracy(cm)


class TestRemap:
    def test_five_to_three_merging(self):
        counts = np.arange(25).reshape(5, 5)
        cm = ConfusionMatrix(classes=(1, 2, 3, 4, 5), counts=counts)
        cm3 = remap_confusion(cm, group_to_three)
        assert cm3.classes == (1, 2, 3)
        # block sums of the {1,2}, {3,4}, {5} partition
        blocks = [(0, 2), (2, 4), (4, 5)]
        for i, (r0, r1) in enumerate(blocks):
            for j, (c0, c1) in enumerate(blocks):
                assert cm3.counts[i, j] == counts[r0:r1, c0:c1].sum()
        assert cm3.total == cm.total

    def test_merging_cannot_lose_accuracy(self):
        rng = np.random.default_rng(33)
        truth = rng.integers(1, 6, size=200).tolist()
        pred = rng.integers(1, 6, size=200).tolist()
        cm = confusion_matrix(truth, pred, classes=(1, 2, 3, 4, 5))
        assert accuracy(remap_confusion(cm, group_to_three)) >= accuracy(cm)


class TestLopoFolds:
    def test_partition_properties(self, small_dataset):
        folds = lopo_folds(small_dataset)
        assert len(folds) == len(small_dataset.participants)
        for train, test in folds:
            held = test.participants[0]
            assert held not in train.participants
            assert all(s.participant_id == held for s in test.sets)
            assert all(s.participant_id != held for s in train.sets)
            assert len(train.sets) + len(test.sets) == len(small_dataset.sets)

    def test_needs_two_participants_with_data(self):
        trial = make_trial(np.zeros(40), np.zeros(40), rate=10.0,
                           duration=3.9)
        ds = Dataset(sets=(make_set([trial], pid="P01"),),
                     participants=("P01", "P02"))
        with pytest.raises(DataError, match="at least 2 participants"):
            lopo_folds(ds)


def _rated_set(rng, pid, session, rating, scale):
    n = 40
    trials = [
        make_trial(rng.normal(0, scale, n), rng.normal(0, scale, n),
                   rate=10.0, duration=3.9)
        for _ in range(2)
    ]
    return make_set(trials, pid=pid, session=session, pt=rating)


def _two_class_dataset(rng, pids=("P01", "P02", "P03"), sets_per_class=3):
    """Trivially separable two-class data for every participant."""
    sets = []
    for pid in pids:
        session = 1
        for _ in range(sets_per_class):
            sets.append(_rated_set(rng, pid, session, 1, scale=0.2))
            sets.append(_rated_set(rng, pid, session + 1, 2, scale=4.0))
            session += 2
    return Dataset(sets=tuple(sets), participants=tuple(pids))


class TestTuneC:
    def test_ties_resolve_to_smallest_C(self):
        # trivially separable data scores 1.0 at every C, so the tie
        # rule must pick the bottom of the grid
        ds = _two_class_dataset(np.random.default_rng(34))
        best, bad = tune_C(ds, grid=(1e-3, 1.0, 1e3), config=FAST)
        assert best == 1e-3
        assert bad == 0

    def test_array_input_requires_labels_and_pids(self):
        with pytest.raises(ValueError, match="labels and pids"):
            tune_C(np.ones((4, 3)))

    def test_single_point_grid_short_circuits(self):
        out = tune_C(np.ones((4, 3)), labels=np.array([1, 1, 2, 2]),
                     pids=["a", "a", "b", "b"], grid=(2.5,))
        assert out == (2.5, 0)

    def test_empty_grid_rejected(self, small_dataset):
        with pytest.raises(ValueError, match="empty C grid"):
            tune_C(small_dataset, grid=())


class TestNestedLopo:
    def test_report_structure(self, small_dataset):
        report = run_nested_lopo(small_dataset, grid=TINY_GRID, config=FAST)
        assert isinstance(report, CVReport)
        held = [f.held_out_participant for f in report.folds]
        assert sorted(held + list(report.skipped_participants)) == sorted(
            small_dataset.participants)
        assert 0.0 <= report.overall_accuracy <= 1.0
        assert 0.0 <= report.overall_macro_f1 <= 1.0
        for f in report.folds:
            assert f.chosen_C in TINY_GRID
        n_tested = sum(f.confusion.total for f in report.folds)
        assert report.pooled_confusion.total == n_tested
        assert report.grid == TINY_GRID

    def test_needs_three_participants(self):
        ds = _two_class_dataset(np.random.default_rng(35),
                                pids=("P01", "P02"))
        with pytest.raises(DataError, match="at least 3 participants"):
            run_nested_lopo(ds, grid=TINY_GRID, config=FAST)

    def test_single_class_training_fold_is_skipped(self):
        rng = np.random.default_rng(36)
        sets = []
        # P01 alone carries class 2; holding it out starves training
        for k in range(3):
            sets.append(_rated_set(rng, "P01", k + 1, 1, scale=0.2))
            sets.append(_rated_set(rng, "P01", k + 4, 2, scale=4.0))
            sets.append(_rated_set(rng, "P02", k + 1, 1, scale=0.2))
            sets.append(_rated_set(rng, "P03", k + 1, 1, scale=0.2))
        ds = Dataset(sets=tuple(sets),
                     participants=("P01", "P02", "P03"))
        report = run_nested_lopo(ds, grid=TINY_GRID, config=FAST)
        assert report.skipped_participants == ("P01",)
        assert sorted(f.held_out_participant for f in report.folds) == [
            "P02", "P03"]

    def test_separable_data_scores_perfectly(self):
        ds = _two_class_dataset(np.random.default_rng(37))
        report = run_nested_lopo(ds, grid=TINY_GRID, config=FAST)
        assert report.overall_accuracy == 1.0
        assert report.overall_macro_f1 == 1.0
        assert report.n_unconverged == 0


class TestLeakageAudit:
    def test_held_out_participant_never_reaches_training(self, small_dataset):
        events = []

        def hook(event, held_out, pids):
            events.append(event)
            assert held_out is not None
            if event != "inner_test":
                assert held_out not in pids

        config = EvalConfig(tolerance=1e-5, audit_hook=hook)
        run_nested_lopo(small_dataset, grid=TINY_GRID, config=config)
        seen = set(events)
        assert {"inner_train", "inner_test", "inner_scaler_fit",
                "inner_class_weights", "outer_scaler_fit",
                "outer_class_weights", "outer_train"} <= seen

    def test_inner_folds_also_exclude_their_own_holdout(self, small_dataset):
        # the inner_test rows must never appear in the inner_train rows
        # of the same fold; track pairs through the call order
        state = {}
        violations = []

        def hook(event, held_out, pids):
            if event == "inner_train":
                state["train"] = pids
            elif event == "inner_test":
                if pids & state.get("train", frozenset()):
                    violations.append((held_out, pids))

        config = EvalConfig(tolerance=1e-5, audit_hook=hook)
        run_nested_lopo(small_dataset, grid=TINY_GRID, config=config)
        assert violations == []


class TestThreeClass:
    def test_map_predictions_matches_remapped_five_class(self, small_dataset):
        five = run_nested_lopo(small_dataset, grid=TINY_GRID, config=FAST)
        mapped = evaluate_three_class(small_dataset, "map-predictions",
                                      grid=TINY_GRID, config=FAST)
        expected = remap_confusion(five.pooled_confusion, group_to_three)
        assert mapped.pooled_confusion.classes == expected.classes
        assert np.array_equal(mapped.pooled_confusion.counts,
                              expected.counts)
        assert mapped.overall_accuracy >= five.overall_accuracy

    def test_retrain_mode_runs_on_grouped_labels(self, small_dataset):
        report = evaluate_three_class(small_dataset, "retrain",
                                      grid=TINY_GRID, config=FAST)
        assert set(report.pooled_confusion.classes) <= {1, 2, 3}

    def test_stored_report_cannot_be_retrained(self, small_dataset):
        five = run_nested_lopo(small_dataset, grid=TINY_GRID, config=FAST)
        with pytest.raises(ValueError, match="only be remapped"):
            evaluate_three_class(five, "retrain")

    def test_unknown_mode_rejected(self, small_dataset):
        with pytest.raises(ValueError, match="unknown mode"):
            evaluate_three_class(small_dataset, "both")


class TestAgreement:
    def test_agreement_matrix_counts_every_set(self, small_dataset):
        table = dataset_features(small_dataset)
        cm = rater_agreement(table)
        assert cm.total == len(small_dataset.sets)
        grouped = rater_agreement(table, three_class=True)
        assert set(grouped.classes) <= {1, 2, 3}
        assert grouped.total == cm.total


@pytest.fixture(scope="module")
def doc(small_dataset):
    return evaluate_dataset(small_dataset, grid=TINY_GRID, config=FAST,
                            three_class_mode="map-predictions")


class TestReportDocument:
    def test_document_shape(self, doc):
        assert doc["format"] == "swayrater-report"
        assert set(doc) >= {"five_class", "agreement", "t_test_svm_vs_self",
                            "three_class", "agreement_three_class"}
        t = doc["t_test_svm_vs_self"]
        assert ("degenerate" in t) or {"t", "df", "p"} <= set(t)

    def test_json_round_trip(self, doc, tmp_path):
        json_path = tmp_path / "report.json"
        text_path = tmp_path / "report.txt"
        write_report_document(doc, json_path, text_path)
        back = load_report_document(json_path)
        assert back == json.loads(json.dumps(doc))
        assert text_path.read_text() == render_document(doc)

    def test_report_from_dict_reconstructs(self, doc):
        report = report_from_dict(doc["five_class"])
        assert isinstance(report, CVReport)
        assert report.overall_accuracy == doc["five_class"]["overall_accuracy"]
        assert len(report.folds) == len(doc["five_class"]["folds"])

    def test_format_checks_on_load(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"format": "other"}')
        with pytest.raises(DataError, match="not a swayrater-report"):
            load_report_document(bad)

    def test_render_is_human_readable(self, doc):
        text = render_document(doc)
        assert "five-level task" in text
        assert "three-level task (map-predictions)" in text
        assert "pooled confusion" in text
        assert "self-ratings vs therapist" in text

    def test_render_confusion_margins(self):
        cm_doc = {"classes": [1, 2], "counts": [[8, 2], [1, 4]]}
        text = render_confusion(cm_doc, "demo")
        assert text.startswith("demo")
        assert "accuracy: 80.0% (12/15)" in text

    def test_svm_vs_self_returns_test_or_degenerate(self, doc,
                                                    small_dataset):
        table = dataset_features(small_dataset)
        report = report_from_dict(doc["five_class"])
        out = svm_vs_self_t_test(report, table)
        if isinstance(out, dict):
            assert out["degenerate"] is True
        else:
            assert np.isfinite(out.t) and 0.0 <= out.p <= 1.0
