"""Metrics, PR-AUC, fold plans, and grid selection against brute-force oracles."""

import numpy as np
import pytest

from droughtimpact import boost, evaluation, resample
from droughtimpact.errors import ValidationError
from droughtimpact.evaluation import ConfusionCounts


def brute_counts(labels, scores, threshold):
    tp = fp = tn = fn = 0
    for y, s in zip(labels, scores):
        pred = 1 if s >= threshold else 0
        if pred and y:
            tp += 1
        elif pred and not y:
            fp += 1
        elif not pred and not y:
            tn += 1
        else:
            fn += 1
    return ConfusionCounts(tp=tp, fp=fp, tn=tn, fn=fn)


def brute_average_precision(scores, labels):
    """Step-integrated AP by explicit enumeration of distinct thresholds."""
    n_pos = sum(labels)
    thresholds = sorted(set(scores), reverse=True)
    ap = 0.0
    prev_recall = 0.0
    for t in thresholds:
        tp = sum(1 for y, s in zip(labels, scores) if s >= t and y == 1)
        pred = sum(1 for s in scores if s >= t)
        recall = tp / n_pos
        precision = tp / pred
        ap += (recall - prev_recall) * precision
        prev_recall = recall
    return ap


class TestFBeta:
    def test_perfect(self):
        assert evaluation.fbeta(ConfusionCounts(10, 0, 0, 0), 2.0) == 1.0

    def test_zero_recall(self):
        assert evaluation.fbeta(ConfusionCounts(0, 3, 5, 7), 2.0) == 0.0

    def test_hand_value(self):
        # P = 2/3, R = 0.8 -> F2 = 5PR/(4P+R) ~ 0.7692
        c = ConfusionCounts(tp=8, fp=4, tn=0, fn=2)
        assert evaluation.fbeta(c, 2.0) == pytest.approx(
            5 * (2 / 3) * 0.8 / (4 * (2 / 3) + 0.8), abs=1e-12
        )

    def test_beta_one_is_harmonic_mean(self):
        c = ConfusionCounts(tp=30, fp=10, tn=50, fn=20)
        p, r = evaluation.precision(c), evaluation.recall(c)
        assert evaluation.fbeta(c, 1.0) == pytest.approx(2 * p * r / (p + r), abs=1e-12)

    def test_f2_weighs_recall_over_precision(self):
        # both have F1 = 0.5; the higher-recall one must win on F2
        low_recall = ConfusionCounts(tp=30, fp=10, tn=0, fn=70)   # P=.75 R=.3
        high_recall = ConfusionCounts(tp=75, fp=175, tn=0, fn=25)  # P=.3 R=.75
        f1a = evaluation.fbeta(low_recall, 1.0)
        f1b = evaluation.fbeta(high_recall, 1.0)
        assert f1a == pytest.approx(f1b, abs=1e-12)
        assert evaluation.fbeta(high_recall, 2.0) > evaluation.fbeta(low_recall, 2.0)

    def test_bad_beta(self):
        with pytest.raises(ValidationError):
            evaluation.fbeta(ConfusionCounts(1, 1, 1, 1), 0.0)


class TestPrAuc:
    def test_perfect_ranking(self):
        scores = np.array([0.9, 0.8, 0.7, 0.2, 0.1])
        labels = np.array([1, 1, 1, 0, 0])
        assert evaluation.pr_auc(scores, labels) == 1.0

    def test_single_positive_ranked_last(self):
        scores = np.array([0.9, 0.8, 0.7, 0.1])
        labels = np.array([0, 0, 0, 1])
        assert evaluation.pr_auc(scores, labels) == pytest.approx(0.25, abs=1e-12)

    def test_ties_processed_as_blocks(self):
        scores = np.array([0.5, 0.5, 0.5, 0.5])
        labels = np.array([1, 0, 1, 0])
        # one block: recall 0 -> 1 at precision 1/2
        assert evaluation.pr_auc(scores, labels) == pytest.approx(0.5, abs=1e-12)

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(0)
        scores = rng.random(60)
        labels = (rng.random(60) < 0.4).astype(int)
        base = evaluation.pr_auc(scores, labels)
        assert evaluation.pr_auc(3.0 * scores + 2.0, labels) == base
        assert evaluation.pr_auc(np.exp(scores), labels) == base

    def test_random_scores_statistical_mean(self):
        # Monte Carlo oracle: expected AP of random scores ~ positive rate
        rng = np.random.default_rng(1)
        rate = 0.3
        aps = []
        for _ in range(60):
            labels = (rng.random(800) < rate).astype(int)
            scores = rng.random(800)
            aps.append(evaluation.pr_auc(scores, labels))
        assert abs(np.mean(aps) - rate) < 0.02

    def test_no_positives_rejected(self):
        with pytest.raises(ValidationError):
            evaluation.pr_auc(np.array([0.5]), np.array([0]))


class TestBruteForceParity:
    def test_thousand_randomized_sets(self):
        rng = np.random.default_rng(2)
        for _ in range(1000):
            n = int(rng.integers(5, 60))
            labels = (rng.random(n) < rng.uniform(0.1, 0.9)).astype(int)
            if labels.sum() == 0:
                labels[int(rng.integers(n))] = 1
            scores = np.round(rng.random(n), int(rng.integers(1, 4)))
            threshold = float(rng.uniform(0.2, 0.8))
            mine = evaluation.confusion_counts(labels, scores, threshold)
            ref = brute_counts(labels, scores, threshold)
            assert mine == ref
            assert evaluation.accuracy(mine) == (ref.tp + ref.tn) / n
            ap = evaluation.pr_auc(scores, labels)
            assert ap == pytest.approx(brute_average_precision(scores, labels), abs=1e-9)


class TestStratifiedKFold:
    def test_divisible_positives(self):
        y = np.zeros(100, dtype=int)
        y[:30] = 1
        plan = evaluation.stratified_kfold(y, k=10, seed=0)
        for fold in plan.folds:
            assert int(y[fold].sum()) == 3

    def test_positive_counts_within_one(self):
        y = np.zeros(100, dtype=int)
        y[:25] = 1
        plan = evaluation.stratified_kfold(y, k=10, seed=1)
        counts = [int(y[fold].sum()) for fold in plan.folds]
        assert set(counts) <= {2, 3}

    def test_disjoint_cover(self):
        y = np.zeros(97, dtype=int)
        y[:31] = 1
        plan = evaluation.stratified_kfold(y, k=10, seed=2)
        union = np.concatenate(plan.folds)
        assert len(union) == 97 and len(np.unique(union)) == 97

    def test_deterministic(self):
        y = np.zeros(50, dtype=int)
        y[:20] = 1
        a = evaluation.stratified_kfold(y, k=5, seed=3)
        b = evaluation.stratified_kfold(y, k=5, seed=3)
        assert all(np.array_equal(x, z) for x, z in zip(a.folds, b.folds))

    def test_too_few_positives(self):
        y = np.zeros(100, dtype=int)
        y[:5] = 1
        with pytest.raises(ValidationError, match="at least 10 positives"):
            evaluation.stratified_kfold(y, k=10, seed=0)


class TestSelection:
    def test_single_point_selected(self):
        assert evaluation.select_best([0.4], [0.5]) == 0

    def test_higher_f2_wins(self):
        assert evaluation.select_best([0.4, 0.6, 0.5], [0.9, 0.1, 0.9]) == 1

    def test_pr_auc_breaks_f2_tie(self):
        assert evaluation.select_best([0.5, 0.5], [0.6, 0.7]) == 1

    def test_declaration_order_breaks_full_tie(self):
        assert evaluation.select_best([0.5, 0.5, 0.5], [0.7, 0.7, 0.7]) == 0


class TestGridSearchAndEvaluate:
    @staticmethod
    def _dataset(seed=4, n=240):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(n, 3))
        y = ((X[:, 0] - 0.5 * X[:, 1] + 0.4 * rng.normal(size=n)) > 0).astype(int)
        from droughtimpact.features import FeatureSchema

        schema = FeatureSchema(
            column_names=("a", "b", "c"),
            numeric_columns=(0, 1, 2),
            onehot_groups=(),
        )
        return X, y, schema

    def test_report_has_fold_times_grid_rows(self):
        X, y, schema = self._dataset()
        folds = evaluation.stratified_kfold(y, k=4, seed=0)
        grid = [boost.TrainConfig(n_rounds=3, max_depth=d) for d in (1, 2)]
        result = evaluation.grid_search(
            X, y, grid, folds, resample.ResamplePlan(seed=0), schema
        )
        assert len(result.fold_metrics) == 4 * 2
        assert result.best_index in (0, 1)
        assert result.best_config is grid[result.best_index]

    def test_single_point_grid(self):
        X, y, schema = self._dataset(seed=5)
        folds = evaluation.stratified_kfold(y, k=3, seed=1)
        grid = [boost.TrainConfig(n_rounds=2, max_depth=2)]
        result = evaluation.grid_search(
            X, y, grid, folds, resample.ResamplePlan(seed=1), schema
        )
        assert result.best_index == 0

    def test_empty_grid_rejected(self):
        X, y, schema = self._dataset()
        folds = evaluation.stratified_kfold(y, k=3, seed=1)
        with pytest.raises(ValidationError, match="grid is empty"):
            evaluation.grid_search(X, y, [], folds, resample.ResamplePlan(), schema)

    def test_evaluate_all_correct(self):
        X, y, schema = self._dataset(seed=6)
        model = boost.train(X, y.astype(float), boost.TrainConfig(n_rounds=25, max_depth=3))
        report = evaluation.evaluate(model, X, y, 0.5, category="demo")
        scores = model.predict(X)
        ref = brute_counts(y, scores, 0.5)
        assert report.accuracy == (ref.tp + ref.tn) / len(y)
        assert report.recall == ref.tp / (ref.tp + ref.fn)
        assert report.f2 == evaluation.fbeta(ref, 2.0)
        assert report.category == "demo"

    def test_evaluate_trivial_all_positive(self):
        X = np.zeros((5, 2))
        model = boost.Ensemble(base_score=0.9, eta=0.3, n_features=2)
        report = evaluation.evaluate(model, X, np.ones(5, dtype=int), 0.5)
        assert report.accuracy == 1.0 and report.recall == 1.0 and report.f2 == 1.0

    def test_bad_threshold(self):
        X, y, _ = self._dataset()
        model = boost.Ensemble(base_score=0.5, eta=0.3, n_features=3)
        with pytest.raises(ValidationError, match="threshold"):
            evaluation.evaluate(model, X, y, 1.5)
