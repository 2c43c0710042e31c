"""Gradient-boosted tree training: objective math, growth, determinism."""

import numpy as np
import pytest
from scipy.special import expit, logit

from droughtimpact import boost
from droughtimpact.errors import ValidationError


class TestGradHess:
    def test_positive_label_at_zero_margin(self):
        g, h = boost.grad_hess(np.array([1.0]), np.array([0.0]), 1.0)
        assert g[0] == -0.5 and h[0] == 0.25

    def test_negative_label_at_zero_margin(self):
        g, h = boost.grad_hess(np.array([0.0]), np.array([0.0]), 1.0)
        assert g[0] == 0.5 and h[0] == 0.25

    def test_weight_scales_linearly(self):
        g, h = boost.grad_hess(np.array([1.0]), np.array([0.0]), 3.0)
        assert g[0] == -1.5 and h[0] == 0.75

    def test_scaling_property_on_positives(self):
        rng = np.random.default_rng(0)
        y = (rng.random(50) < 0.5).astype(float)
        m = rng.normal(size=50)
        g1, h1 = boost.grad_hess(y, m, 1.0)
        g4, h4 = boost.grad_hess(y, m, 4.0)
        pos = y == 1.0
        assert np.allclose(g4[pos], 4.0 * g1[pos]) and np.allclose(h4[pos], 4.0 * h1[pos])
        assert np.array_equal(g4[~pos], g1[~pos]) and np.array_equal(h4[~pos], h1[~pos])


class TestLeafWeightAndGain:
    def test_balanced_gradients_zero_weight(self):
        assert boost.leaf_weight(0.0, 1.0, 1.0) == 0.0

    def test_hand_value(self):
        assert boost.leaf_weight(-1.0, 1.0, 1.0) == 0.5

    def test_lambda_shrinks_magnitude_monotonically(self):
        weights = [abs(boost.leaf_weight(-3.0, 2.0, lam)) for lam in (0.0, 1.0, 10.0, 100.0)]
        assert weights == sorted(weights, reverse=True)

    def test_symmetric_split_gain_is_minus_gamma(self):
        # exact at lambda = 0; regularization only makes it worse
        assert boost.split_gain(1.5, 2.0, 1.5, 2.0, 0.0, 0.7) == pytest.approx(-0.7, abs=1e-12)
        assert boost.split_gain(1.5, 2.0, 1.5, 2.0, 1.0, 0.7) <= -0.7

    def test_hand_gain(self):
        # 0.5 * (4/2 + 4/2 - 0/3) = 2.0
        assert boost.split_gain(-2.0, 1.0, 2.0, 1.0, 1.0, 0.0) == pytest.approx(2.0, abs=1e-12)


class TestBuildTree:
    def test_four_point_hand_example(self):
        X = np.array([[1.0], [2.0], [3.0], [4.0]])
        y = np.array([0.0, 0.0, 1.0, 1.0])
        cfg = boost.TrainConfig(n_rounds=1, max_depth=1, lam=1.0, gamma=0.0,
                                min_child_weight=0.0)
        tree = boost.train(X, y, cfg).trees[0]
        assert tree.feature[0] == 0
        assert tree.threshold[0] == 2.5
        # leaf weights -G/(H+lambda) with G = +/-1.0, H = 0.5
        left, right = tree.children_left[0], tree.children_right[0]
        assert tree.value[left] == pytest.approx(-1.0 / 1.5, abs=1e-12)
        assert tree.value[right] == pytest.approx(1.0 / 1.5, abs=1e-12)

    def test_uniform_labels_single_leaf(self):
        X = np.arange(10, dtype=float).reshape(-1, 1)
        y = np.ones(10)
        cfg = boost.TrainConfig(n_rounds=1, max_depth=3, lam=1.0)
        tree = boost.train(X, y, cfg).trees[0]
        assert tree.n_nodes == 1
        # g = -0.5 each, h = 0.25 each
        assert tree.value[0] == pytest.approx(5.0 / 3.5, abs=1e-12)

    def test_max_depth_zero_forbidden(self):
        with pytest.raises(ValidationError, match="max_depth"):
            boost.TrainConfig(max_depth=0)

    def test_gamma_prunes_weak_splits(self):
        X = np.array([[1.0], [2.0], [3.0], [4.0]])
        y = np.array([0.0, 0.0, 1.0, 1.0])
        strict = boost.TrainConfig(n_rounds=1, max_depth=1, lam=1.0, gamma=10.0,
                                   min_child_weight=0.0)
        tree = boost.train(X, y, strict).trees[0]
        assert tree.n_nodes == 1

    def test_tie_broken_by_lowest_feature_index(self):
        x = np.array([1.0, 2.0, 3.0, 4.0])
        X = np.column_stack([x, x])  # identical columns, identical gains
        y = np.array([0.0, 0.0, 1.0, 1.0])
        cfg = boost.TrainConfig(n_rounds=1, max_depth=1, min_child_weight=0.0)
        tree = boost.train(X, y, cfg).trees[0]
        assert tree.feature[0] == 0

    def test_cover_additivity_exact(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(300, 5))
        y = (X[:, 0] + 0.3 * rng.normal(size=300) > 0).astype(float)
        model = boost.train(X, y, boost.TrainConfig(n_rounds=5, max_depth=4))
        for tree in model.trees:
            for i in range(tree.n_nodes):
                left, right = tree.children_left[i], tree.children_right[i]
                if left >= 0:
                    assert tree.cover[i] == tree.cover[left] + tree.cover[right]

    def test_recorded_gain_positive_and_recomputable(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(200, 4))
        y = (X[:, 1] > 0.2).astype(float)
        cfg = boost.TrainConfig(n_rounds=4, max_depth=3, gamma=0.1, lam=2.0)
        model = boost.train(X, y, cfg)
        for tree in model.trees:
            for i in range(tree.n_nodes):
                left, right = tree.children_left[i], tree.children_right[i]
                if left >= 0:
                    assert tree.gain[i] > 0.0
                    recomputed = boost.split_gain(
                        tree.grad_sum[left], tree.cover[left],
                        tree.grad_sum[right], tree.cover[right],
                        cfg.lam, cfg.gamma,
                    )
                    assert recomputed == pytest.approx(tree.gain[i], abs=1e-12)


class TestTrain:
    def test_zero_rounds_predicts_base_score(self):
        X = np.random.default_rng(0).normal(size=(7, 2))
        model = boost.train(X, np.zeros(7), boost.TrainConfig(n_rounds=0, base_score=0.37))
        assert np.all(model.predict(X) == 0.37)

    def test_single_round_single_leaf_margin(self):
        # constant feature forces a single leaf; compose grad_hess and
        # leaf_weight by hand: w* = -G/(H+lam), margin = logit(base) + eta*w*
        X = np.ones((8, 1))
        y = np.array([1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0])
        cfg = boost.TrainConfig(eta=0.3, n_rounds=1, max_depth=2, lam=1.0, base_score=0.5)
        model = boost.train(X, y, cfg)
        G = (0.5 - 1.0) * 3 + 0.5 * 5
        H = 0.25 * 8
        expected = 0.0 + 0.3 * (-G / (H + 1.0))
        assert model.margin(X)[0] == pytest.approx(expected, abs=1e-12)

    def test_logloss_non_increasing_on_separable_data(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(150, 3))
        y = (X[:, 0] > 0).astype(float)
        cfg = boost.TrainConfig(eta=0.3, n_rounds=50, max_depth=3, gamma=0.0, lam=1.0)
        model = boost.train(X, y, cfg)
        margins = np.full(len(y), logit(cfg.base_score))
        losses = [boost.logloss(y, expit(margins))]
        for tree in model.trees:
            margins = margins + cfg.eta * tree.leaf_values(X)
            losses.append(boost.logloss(y, expit(margins)))
        assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))

    def test_deterministic_bit_identical(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(120, 6))
        y = (X[:, 2] - X[:, 3] > 0).astype(float)
        cfg = boost.TrainConfig(n_rounds=10, max_depth=3)
        a = boost.train(X, y, cfg)
        b = boost.train(X, y, cfg)
        assert boost.dumps(a) == boost.dumps(b)

    def test_probabilities_in_open_unit_interval(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(60, 2))
        y = (X[:, 0] > 0).astype(float)
        model = boost.train(X, y, boost.TrainConfig(n_rounds=30, max_depth=3))
        p = model.predict(X)
        assert np.all(p > 0.0) and np.all(p < 1.0)

    def test_larger_lambda_shrinks_weights_at_same_structure(self):
        X = np.array([[1.0], [2.0], [3.0], [4.0]] * 10)
        y = np.array([0.0, 0.0, 1.0, 1.0] * 10)
        small = boost.train(X, y, boost.TrainConfig(n_rounds=1, max_depth=1, lam=1.0))
        large = boost.train(X, y, boost.TrainConfig(n_rounds=1, max_depth=1, lam=50.0))
        ts, tl = small.trees[0], large.trees[0]
        assert ts.threshold[0] == tl.threshold[0]
        for i in range(ts.n_nodes):
            if ts.feature[i] < 0:
                assert abs(tl.value[i]) <= abs(ts.value[i])

    def test_non_binary_labels_rejected(self):
        with pytest.raises(ValidationError, match="binary"):
            boost.train(np.ones((3, 1)), np.array([0.0, 0.5, 1.0]), boost.TrainConfig())


class TestMissingValues:
    def test_learned_default_branch_routes_nan(self):
        # all NaN rows are positive: the learned default must send them
        # toward the positive leaf
        X = np.array([[1.0], [2.0], [3.0], [np.nan], [4.0], [5.0], [6.0], [np.nan]])
        y = np.array([0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0])
        cfg = boost.TrainConfig(n_rounds=5, max_depth=2, min_child_weight=0.0)
        model = boost.train(X, y, cfg)
        p = model.predict(np.array([[np.nan]]))
        assert p[0] > 0.5

    def test_prediction_follows_default(self):
        X = np.array([[1.0], [2.0], [3.0], [4.0]])
        y = np.array([0.0, 0.0, 1.0, 1.0])
        model = boost.train(X, y, boost.TrainConfig(n_rounds=1, max_depth=1,
                                                    min_child_weight=0.0))
        tree = model.trees[0]
        expected = tree.value[tree.children_left[0] if tree.default_left[0]
                              else tree.children_right[0]]
        assert tree.leaf_values(np.array([[np.nan]]))[0] == expected


class TestEnsemble:
    def test_empty_ensemble_predicts_base(self):
        model = boost.Ensemble(base_score=0.5, eta=0.3, n_features=2)
        X = np.zeros((4, 2))
        assert np.all(model.predict(X) == 0.5)

    def test_hand_built_two_tree_ensemble_exact(self):
        def stump(feature, threshold, w_left, w_right):
            return boost.Tree(
                parent=np.array([-1, 0, 0], dtype=np.int32),
                children_left=np.array([1, -1, -1], dtype=np.int32),
                children_right=np.array([2, -1, -1], dtype=np.int32),
                default_left=np.array([True, False, False]),
                feature=np.array([feature, -1, -1], dtype=np.int32),
                threshold=np.array([threshold, np.nan, np.nan]),
                value=np.array([0.0, w_left, w_right]),
                cover=np.array([4.0, 2.0, 2.0]),
                gain=np.full(3, np.nan),
                grad_sum=np.full(3, np.nan),
            )

        model = boost.Ensemble(base_score=0.5, eta=0.25, n_features=2)
        model.trees = [stump(0, 0.0, -1.0, 2.0), stump(1, 1.0, 0.5, -0.75)]
        x = np.array([[0.5, 2.0], [-1.0, 0.0]])
        # row 0: feature0 >= 0 -> 2.0; feature1 >= 1 -> -0.75
        # row 1: feature0 < 0 -> -1.0; feature1 < 1 -> 0.5
        expected = expit(np.array([0.25 * (2.0 - 0.75), 0.25 * (-1.0 + 0.5)]))
        assert np.abs(model.predict(x) - expected).max() < 1e-12


class TestSerialization:
    @staticmethod
    def _model(seed=6, with_nan=False):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(150, 4))
        if with_nan:
            X[rng.random(size=X.shape) < 0.1] = np.nan
        y = ((np.nan_to_num(X[:, 0]) + np.nan_to_num(X[:, 1])) > 0).astype(float)
        return boost.train(X, y, boost.TrainConfig(n_rounds=6, max_depth=3)), X

    def test_roundtrip_predictions_bit_exact(self, tmp_path):
        model, X = self._model()
        path = tmp_path / "m.txt"
        model.save(path)
        reloaded = boost.load(path)
        assert np.array_equal(model.predict(X), reloaded.predict(X))

    def test_roundtrip_with_missing_values(self, tmp_path):
        model, X = self._model(seed=7, with_nan=True)
        path = tmp_path / "m.txt"
        model.save(path)
        reloaded = boost.load(path)
        assert np.array_equal(model.predict(X), reloaded.predict(X))

    def test_dumps_stable(self):
        model, _ = self._model()
        assert boost.dumps(model) == boost.dumps(boost.loads(boost.dumps(model)))

    def test_bad_header_rejected(self):
        with pytest.raises(ValidationError, match="unsupported model format"):
            boost.loads("not a model\n")
