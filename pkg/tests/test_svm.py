"""Weighted binary SVM and the one-vs-one multiclass wrapper."""

import numpy as np
import pytest

from swayrater import (
    BinaryLinearSVM,
    MultiClassSVM,
    ScalerParams,
    TrainConfig,
    class_weights,
    decision_value,
    load_model,
    predict,
    predict_batch,
    save_model,
    train_binary,
    train_multiclass,
)
from swayrater.svm import primal_objective

from oracles import hinge_primal


def _blobs(rng, centers, n_per=8, scale=0.3):
    X, labels = [], []
    for label, c in centers.items():
        X.append(rng.normal(scale=scale, size=(n_per, len(c))) + np.asarray(c))
        labels += [label] * n_per
    return np.vstack(X), np.array(labels)


class TestClassWeights:
    def test_inverse_frequency_formula(self):
        w = class_weights([1, 1, 1, 2])
        assert w == {1: pytest.approx(4 / 6), 2: pytest.approx(2.0)}

    def test_count_weighted_mean_is_one(self):
        labels = [1] * 7 + [2] * 2 + [5] * 4
        w = class_weights(labels)
        mean = sum(w[l] for l in labels) / len(labels)
        assert mean == pytest.approx(1.0, abs=1e-12)

    def test_rejects_degenerate_input(self):
        with pytest.raises(ValueError, match="empty"):
            class_weights([])
        with pytest.raises(ValueError, match="single-class"):
            class_weights([3, 3, 3])


class TestTrainBinary:
    def test_class_cost_equals_row_duplication(self):
        # doubling the cost of the positive class must match physically
        # duplicating every positive row at unit cost
        rng = np.random.default_rng(21)
        X = rng.normal(size=(14, 2))
        y = np.where(rng.random(14) < 0.5, 1.0, -1.0)
        y[:2] = [1.0, -1.0]
        X += 0.8 * y[:, None]

        weighted = train_binary(X, y, C=1.0, cost_neg=1.0, cost_pos=2.0)
        pos = y > 0
        X_dup = np.vstack([X, X[pos]])
        y_dup = np.concatenate([y, y[pos]])
        duplicated = train_binary(X_dup, y_dup, C=1.0, cost_neg=1.0,
                                  cost_pos=1.0)
        assert weighted.w == pytest.approx(duplicated.w, abs=1e-6)
        assert weighted.b == pytest.approx(duplicated.b, abs=1e-6)

    def test_two_point_problem_exact(self):
        model = train_binary(np.array([[1.0], [-1.0]]),
                             np.array([1.0, -1.0]),
                             C=10.0, cost_neg=1.0, cost_pos=1.0)
        assert model.w[0] == pytest.approx(1.0, abs=1e-3)
        assert model.b == pytest.approx(0.0, abs=1e-3)
        assert model.converged

    def test_primal_objective_matches_reference(self):
        rng = np.random.default_rng(22)
        X = rng.normal(size=(10, 2))
        y = np.where(rng.random(10) < 0.5, 1.0, -1.0)
        y[:2] = [1.0, -1.0]
        model = train_binary(X, y, C=2.0, cost_neg=0.7, cost_pos=1.9)
        U = np.where(y > 0, 2.0 * 1.9, 2.0 * 0.7)
        assert primal_objective(model, X, y, 2.0, 0.7, 1.9) == pytest.approx(
            hinge_primal(model.w, model.b, X, y, U), rel=1e-12)

    def test_rejects_bad_input(self):
        X = np.ones((3, 2))
        with pytest.raises(ValueError, match="single-class"):
            train_binary(X, np.array([1.0, 1.0, 1.0]), C=1.0,
                         cost_neg=1.0, cost_pos=1.0)
        with pytest.raises(ValueError, match="positive"):
            train_binary(X, np.array([1.0, -1.0, 1.0]), C=-1.0,
                         cost_neg=1.0, cost_pos=1.0)

    def test_row_order_does_not_change_the_model(self):
        rng = np.random.default_rng(23)
        X = rng.normal(size=(16, 3))
        y = np.where(rng.random(16) < 0.5, 1.0, -1.0)
        y[:2] = [1.0, -1.0]
        X += 0.5 * y[:, None]
        perm = rng.permutation(16)
        tight = TrainConfig(tolerance=1e-10)
        a = train_binary(X, y, C=1.0, cost_neg=1.0, cost_pos=1.0,
                         config=tight)
        b = train_binary(X[perm], y[perm], C=1.0, cost_neg=1.0,
                         cost_pos=1.0, config=tight)
        assert a.w == pytest.approx(b.w, abs=1e-6)
        assert a.b == pytest.approx(b.b, abs=1e-6)


class TestTrainConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            TrainConfig(C=0.0)
        with pytest.raises(ValueError):
            TrainConfig(tolerance=0.0)
        with pytest.raises(ValueError):
            TrainConfig(max_iterations=0)


class TestTrainMulticlass:
    def test_structure_and_separable_fit(self):
        rng = np.random.default_rng(24)
        X, labels = _blobs(rng, {1: (0, 0), 2: (4, 0), 3: (0, 4)})
        model = train_multiclass(X, labels, C=10.0)
        assert model.classes == (1, 2, 3)
        assert [c.class_pair for c in model.classifiers] == [
            (1, 2), (1, 3), (2, 3)]
        assert model.converged
        assert np.array_equal(predict_batch(model, X), labels)

    def test_explicit_classes_must_be_present(self):
        rng = np.random.default_rng(25)
        X, labels = _blobs(rng, {1: (0, 0), 2: (4, 0)})
        with pytest.raises(ValueError, match="absent"):
            train_multiclass(X, labels, classes=[1, 2, 3])

    def test_config_weights_must_cover_classes(self):
        rng = np.random.default_rng(26)
        X, labels = _blobs(rng, {1: (0, 0), 2: (4, 0)})
        config = TrainConfig(class_weights={1: 1.0})
        with pytest.raises(ValueError, match="no class weight"):
            train_multiclass(X, labels, config=config)

    def test_prefit_scaler_is_respected(self):
        rng = np.random.default_rng(27)
        X, labels = _blobs(rng, {1: (0, 0), 2: (4, 0)})
        scaler = ScalerParams(mean=np.zeros(2), sd=np.ones(2))
        model = train_multiclass(X, labels, C=1.0, scaler=scaler)
        assert np.array_equal(model.scaler.mean, scaler.mean)
        assert np.array_equal(model.scaler.sd, scaler.sd)

    def test_needs_two_classes(self):
        with pytest.raises(ValueError, match="2 classes"):
            train_multiclass(np.ones((4, 2)), np.array([1, 1, 1, 1]))


def _manual_model(weights):
    # three one-feature pairwise classifiers with an identity scaler
    scaler = ScalerParams(mean=np.zeros(1), sd=np.ones(1))
    classifiers = tuple(
        BinaryLinearSVM(w=np.array([w]), b=0.0, class_pair=pair)
        for pair, w in weights.items()
    )
    return MultiClassSVM(classifiers=classifiers, classes=(1, 2, 3),
                         scaler=scaler)


class TestPredictTieBreaking:
    def test_margin_sum_breaks_vote_tie(self):
        # at x=1 the decisions are d12=5, d23=2, d13=-1: one vote each,
        # margin sums 2: 3, 3: 1, 1: -4, so class 2 wins
        model = _manual_model({(1, 2): 5.0, (2, 3): 2.0, (1, 3): -1.0})
        assert predict(model, [1.0]) == 2

    def test_equal_margins_fall_back_to_smallest_label(self):
        # d12=3, d23=2, d13=-1 ties votes and leaves classes 2 and 3
        # at margin 1 each; the smaller label wins
        model = _manual_model({(1, 2): 3.0, (2, 3): 2.0, (1, 3): -1.0})
        assert predict(model, [1.0]) == 2

    def test_perfect_cycle_goes_to_smallest_label(self):
        # d12=1, d23=1, d13=-1: all votes and all margin sums tie
        model = _manual_model({(1, 2): 1.0, (2, 3): 1.0, (1, 3): -1.0})
        assert predict(model, [1.0]) == 1

    def test_decision_value_is_affine_score(self):
        clf = BinaryLinearSVM(w=np.array([2.0, -1.0]), b=0.5,
                              class_pair=(-1, 1))
        assert decision_value(clf, [1.0, 1.0]) == pytest.approx(1.5)


class TestModelValidation:
    def test_binary_rejects_non_finite(self):
        with pytest.raises(ValueError):
            BinaryLinearSVM(w=np.array([np.nan]), b=0.0, class_pair=(0, 1))
        with pytest.raises(ValueError):
            BinaryLinearSVM(w=np.array([[1.0]]), b=0.0, class_pair=(0, 1))

    def test_multiclass_requires_full_pair_set(self):
        scaler = ScalerParams(mean=np.zeros(1), sd=np.ones(1))
        clf = BinaryLinearSVM(w=np.ones(1), b=0.0, class_pair=(1, 2))
        with pytest.raises(ValueError, match="per unordered class pair"):
            MultiClassSVM(classifiers=(clf,), classes=(1, 2, 3),
                          scaler=scaler)


class TestModelSerialization:
    def test_round_trip_is_exact(self, tmp_path):
        rng = np.random.default_rng(28)
        X, labels = _blobs(rng, {1: (0, 0), 2: (3, 0), 4: (0, 3)})
        model = train_multiclass(X, labels, C=1.0)
        path = tmp_path / "model.json"
        save_model(model, path)
        back = load_model(path)
        assert back.classes == model.classes
        assert np.array_equal(back.scaler.mean, model.scaler.mean)
        assert np.array_equal(back.scaler.sd, model.scaler.sd)
        for a, b in zip(back.classifiers, model.classifiers):
            assert a.class_pair == b.class_pair
            assert a.b == b.b
            assert np.array_equal(a.w, b.w)
            assert a.converged == b.converged
        assert np.array_equal(predict_batch(back, X),
                              predict_batch(model, X))

    def test_format_checks(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"format": "other"}')
        with pytest.raises(ValueError, match="not a swayrater-model"):
            load_model(path)
