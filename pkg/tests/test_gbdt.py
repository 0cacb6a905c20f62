import numpy as np
import pytest
from pydantic import ValidationError

from hpscan.core.errors import InputError
from hpscan.evaluation.metrics import auroc
from hpscan.gbdt import (
    TrainConfig,
    feature_importance,
    load_model,
    log_loss,
    logistic_grad_hess,
    model_to_dict,
    predict_proba,
    save_model,
    sigmoid,
    split_gain,
    train,
)
from hpscan.gbdt.model import model_from_dict


def _xor_clusters():
    """Four unequal clusters at the XOR corners."""
    points = [((0, 0), 0, 30), ((1, 1), 0, 20), ((0, 1), 1, 25), ((1, 0), 1, 25)]
    X = np.vstack([np.tile(p, (n, 1)) for p, _, n in points]).astype(np.float64)
    y = np.concatenate([np.full(n, label) for _, label, n in points])
    return X, y


def _noisy_line(n=300, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 4))
    y = (X[:, 0] + 0.5 * rng.normal(size=n) > 0).astype(np.int64)
    return X, y


class TestLoss:
    def test_gradient_and_hessian_at_zero_margin(self):
        g, h = logistic_grad_hess(0.0, 1.0)
        assert g == pytest.approx(-0.5)
        assert h == pytest.approx(0.25)
        g, h = logistic_grad_hess(0.0, 0.0, weight=4.0)
        assert g == pytest.approx(2.0)
        assert h == pytest.approx(1.0)

    @pytest.mark.parametrize("margin, label, weight", [(-2.0, 1.0, 1.0), (0.3, 0.0, 2.5), (3.0, 1.0, 0.5)])
    def test_matches_finite_differences(self, margin, label, weight):
        eps = 1e-5
        loss = lambda m: log_loss(np.array([m]), np.array([label]), np.array([weight]))  # noqa: E731
        g, h = logistic_grad_hess(margin, label, weight)
        assert g == pytest.approx((loss(margin + eps) - loss(margin - eps)) / (2 * eps), rel=1e-6)
        numeric_h = (loss(margin + eps) - 2 * loss(margin) + loss(margin - eps)) / eps ** 2
        assert h == pytest.approx(numeric_h, rel=1e-3)

    def test_sigmoid_saturates_without_overflow(self):
        assert sigmoid(1000.0) == pytest.approx(1.0)
        assert sigmoid(-1000.0) == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("args, expected", [
        ((-2.0, 2.0, 2.0, 2.0, 1.0, 0.0), 4.0 / 3.0),
        ((1.0, 1.0, 1.0, 1.0, 0.0, 0.0), 0.0),
        ((-2.0, 2.0, 2.0, 2.0, 1.0, 0.5), 4.0 / 3.0 - 0.5),
    ])
    def test_split_gain(self, args, expected):
        assert split_gain(*args) == pytest.approx(expected)


class TestTraining:
    def test_separable_data_ranks_perfectly(self):
        X = np.arange(20, dtype=np.float64).reshape(-1, 1)
        y = (X[:, 0] >= 10).astype(np.int64)
        model = train(X, y, TrainConfig(n_rounds=10, max_depth=2))
        assert auroc(predict_proba(model, X), y) == 1.0
        assert model.trees[0].threshold[0] == pytest.approx(9.5)

    def test_xor_needs_depth_two(self):
        X, y = _xor_clusters()
        model = train(X, y, TrainConfig(n_rounds=1, max_depth=2))
        p = model.predict_proba(X)
        assert (p[y == 1] > 0.5).all()
        assert (p[y == 0] < 0.5).all()
        np.testing.assert_array_equal(model.predict(X), y)

    @pytest.mark.parametrize("dataset", [_noisy_line(), _noisy_line(120, seed=5), _xor_clusters()])
    def test_training_loss_never_increases(self, dataset):
        X, y = dataset
        model = train(X, y, TrainConfig(n_rounds=50, max_depth=3, gain_gamma=0.0))
        losses = np.array(model.train_loss)
        assert len(losses) == 51
        assert (np.diff(losses) <= 1e-9).all()

    def test_default_weight_balances_classes(self):
        X = np.zeros((40, 1))
        y = np.array([1] * 10 + [0] * 30)
        model = train(X, y, TrainConfig(n_rounds=0))
        assert model.scale_pos_weight == pytest.approx(3.0)
        np.testing.assert_allclose(model.predict_proba(X), 0.5)

    def test_explicit_weight_shifts_base_score(self):
        X = np.zeros((40, 1))
        y = np.array([1] * 10 + [0] * 30)
        model = train(X, y, TrainConfig(n_rounds=0, scale_pos_weight=1.0))
        np.testing.assert_allclose(model.predict_proba(X), 0.25)
        heavier = train(X, y, TrainConfig(n_rounds=0, scale_pos_weight=6.0))
        np.testing.assert_allclose(heavier.predict_proba(X), 60.0 / 90.0)

    def test_retraining_is_bit_identical(self):
        X, y = _noisy_line(200, seed=3)
        config = TrainConfig(n_rounds=30, max_depth=4)
        first, second = train(X, y, config), train(X, y, config)
        assert model_to_dict(first) == model_to_dict(second)
        assert first.train_loss == second.train_loss
        np.testing.assert_array_equal(first.predict_proba(X), second.predict_proba(X))

    def test_monotone_feature_transform_keeps_predictions(self):
        X, y = _noisy_line(200, seed=6)
        config = TrainConfig(n_rounds=20, max_depth=3)
        original = train(X, y, config).predict_proba(X)
        transformed = train(np.exp(X), y, config).predict_proba(np.exp(X))
        np.testing.assert_allclose(transformed, original, rtol=1e-12)

    def test_positive_weight_raises_scores_of_trained_model(self):
        X, y = _noisy_line(300, seed=8)
        light = train(X, y, TrainConfig(n_rounds=20, max_depth=3, scale_pos_weight=0.5))
        heavy = train(X, y, TrainConfig(n_rounds=20, max_depth=3, scale_pos_weight=8.0))
        assert heavy.predict_proba(X)[y == 1].mean() > light.predict_proba(X)[y == 1].mean()
        assert heavy.predict_proba(X).mean() > light.predict_proba(X).mean()
        assert auroc(heavy.predict_proba(X), y) > 0.8

    def test_depth_is_capped(self):
        assert TrainConfig(max_depth=14).max_depth == 14
        with pytest.raises(ValidationError):
            TrainConfig(max_depth=15)

    def test_depth_zero_gives_constant_trees(self):
        X, y = _noisy_line(100)
        model = train(X, y, TrainConfig(n_rounds=5, max_depth=0))
        assert all(tree.n_nodes == 1 for tree in model.trees)
        p = model.predict_proba(X)
        assert np.ptp(p) == 0.0

    @pytest.mark.parametrize("X, y, message", [
        (np.array([[np.nan], [1.0]]), np.array([0, 1]), "NaN"),
        (np.array([[0.0], [1.0]]), np.array([1, 1]), "each class"),
        (np.array([[0.0], [1.0]]), np.array([0, 2]), "0 or 1"),
        (np.array([[0.0], [1.0]]), np.array([0, 1, 1]), "labels"),
    ])
    def test_rejects_bad_input(self, X, y, message):
        with pytest.raises(InputError, match=message):
            train(X, y)

    def test_prediction_checks_column_count(self):
        X, y = _noisy_line(50)
        model = train(X, y, TrainConfig(n_rounds=2))
        with pytest.raises(InputError):
            model.predict_proba(X[:, :2])


class TestPersistence:
    def test_saved_model_predicts_identically(self, tmp_path):
        X, y = _noisy_line()
        model = train(X, y, TrainConfig(n_rounds=25, max_depth=4), feature_names=["a", "b", "c", "d"])
        path = tmp_path / "model.json"
        save_model(model, path)
        loaded = load_model(path)

        np.testing.assert_array_equal(loaded.predict_proba(X), model.predict_proba(X))
        assert loaded.feature_names == ["a", "b", "c", "d"]
        assert loaded.config == model.config

    def test_rejects_foreign_document(self):
        with pytest.raises(InputError):
            model_from_dict({"format": "xgboost", "version": 1})

    def test_rejects_out_of_range_feature(self):
        X, y = _noisy_line(80)
        data = model_to_dict(train(X, y, TrainConfig(n_rounds=1, max_depth=1)))
        data["featureNames"] = data["featureNames"][:0]
        with pytest.raises(InputError):
            model_from_dict(data)


class TestImportance:
    def test_only_informative_feature_gets_credit(self):
        X = np.column_stack([np.arange(30, dtype=np.float64), np.ones(30)])
        y = (X[:, 0] >= 15).astype(np.int64)
        report = feature_importance(train(X, y, TrainConfig(n_rounds=5, max_depth=2), ["signal", "flat"]))
        assert report.as_dict() == {"signal": pytest.approx(1.0)}
        assert report.top(1) == [("signal", pytest.approx(1.0))]

    def test_sums_to_one(self):
        X, y = _noisy_line()
        report = feature_importance(train(X, y, TrainConfig(n_rounds=20, max_depth=3)))
        assert report.importance.sum() == pytest.approx(1.0)
        assert report.top(1)[0][0] == "f0"

    def test_model_without_splits(self):
        X = np.zeros((10, 2))
        y = np.array([0, 1] * 5)
        report = feature_importance(train(X, y, TrainConfig(n_rounds=3)))
        assert report.empty
        assert report.top(3) == []
