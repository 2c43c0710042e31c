"""Metrics, stratified k-fold plans, and F2-driven grid search.

Model selection follows a lexicographic rule: highest mean F2 across
folds, ties broken by highest mean PR-AUC, remaining ties by grid
declaration order. PR-AUC is average precision with step integration
(no trapezoidal interpolation); equal scores are processed as one
block. Hard-label metrics use a fixed probability threshold, 0.5 by
default.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import boost, resample
from .errors import ValidationError
from .features import FeatureSchema

DEFAULT_THRESHOLD = 0.5
DEFAULT_FOLDS = 10


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def confusion_counts(
    labels: np.ndarray, scores: np.ndarray, threshold: float = DEFAULT_THRESHOLD
) -> ConfusionCounts:
    """Hard-label confusion counts at a probability threshold."""
    y = np.asarray(labels).astype(np.int64)
    pred = (np.asarray(scores) >= threshold).astype(np.int64)
    return ConfusionCounts(
        tp=int(np.sum((pred == 1) & (y == 1))),
        fp=int(np.sum((pred == 1) & (y == 0))),
        tn=int(np.sum((pred == 0) & (y == 0))),
        fn=int(np.sum((pred == 0) & (y == 1))),
    )


def accuracy(c: ConfusionCounts) -> float:
    return (c.tp + c.tn) / c.total if c.total else 0.0


def precision(c: ConfusionCounts) -> float:
    return c.tp / (c.tp + c.fp) if c.tp + c.fp else 0.0


def recall(c: ConfusionCounts) -> float:
    return c.tp / (c.tp + c.fn) if c.tp + c.fn else 0.0


def fbeta(c: ConfusionCounts, beta: float) -> float:
    """F-beta from counts; 0 whenever there are no true positives."""
    if beta <= 0:
        raise ValidationError(f"beta must be > 0, got {beta}")
    if c.tp == 0:
        return 0.0
    p = precision(c)
    r = recall(c)
    b2 = beta * beta
    return (1.0 + b2) * p * r / (b2 * p + r)


def f2(c: ConfusionCounts) -> float:
    return fbeta(c, 2.0)


def pr_auc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Average precision: sum of precision at each recall increment.

    Scores are processed in descending order; rows with equal scores
    enter as one block so the value is invariant under any strictly
    monotone transformation of the scores.
    """
    y = np.asarray(labels).astype(np.int64)
    s = np.asarray(scores, dtype=np.float64)
    n_pos = int(y.sum())
    if n_pos == 0:
        raise ValidationError("PR-AUC undefined without positive labels")
    order = np.argsort(-s, kind="stable")
    s = s[order]
    y = y[order]
    ap = 0.0
    tp = 0
    seen = 0
    i = 0
    n = len(y)
    while i < n:
        j = i
        while j < n and s[j] == s[i]:
            j += 1
        block_pos = int(y[i:j].sum())
        prev_recall = tp / n_pos
        tp += block_pos
        seen = j
        if block_pos:
            ap += (tp / n_pos - prev_recall) * (tp / seen)
        i = j
    return ap


@dataclass(frozen=True)
class MetricsReport:
    """Test-set metrics for one category at one threshold."""

    category: str
    accuracy: float
    recall: float
    precision: float
    f2: float
    pr_auc: float
    threshold: float


def evaluate(
    ensemble: boost.Ensemble,
    X: np.ndarray,
    labels: np.ndarray,
    threshold: float = DEFAULT_THRESHOLD,
    category: str = "",
) -> MetricsReport:
    """Score a trained model on held-out rows."""
    if not 0.0 < threshold < 1.0:
        raise ValidationError(f"threshold must be in (0, 1), got {threshold}")
    scores = ensemble.predict(X)
    c = confusion_counts(labels, scores, threshold)
    return MetricsReport(
        category=category,
        accuracy=accuracy(c),
        recall=recall(c),
        precision=precision(c),
        f2=f2(c),
        pr_auc=pr_auc(scores, labels),
        threshold=threshold,
    )


@dataclass(frozen=True)
class FoldPlan:
    """Disjoint fold index sets covering all rows, positives balanced."""

    k: int
    folds: tuple
    seed: int


def stratified_kfold(labels: np.ndarray, k: int = DEFAULT_FOLDS, seed: int = 0) -> FoldPlan:
    """Deal shuffled positives and negatives round-robin into k folds.

    Per-fold positive counts differ by at most one; fewer positives than
    folds is an error.
    """
    y = np.asarray(labels).astype(np.int64)
    pos = np.flatnonzero(y == 1)
    neg = np.flatnonzero(y == 0)
    if len(pos) < k:
        raise ValidationError(
            f"stratified {k}-fold needs at least {k} positives, found {len(pos)}"
        )
    rng = np.random.default_rng(seed)
    pos = rng.permutation(pos)
    neg = rng.permutation(neg)
    folds = [[] for _ in range(k)]
    for i, r in enumerate(pos):
        folds[i % k].append(r)
    for i, r in enumerate(neg):
        folds[i % k].append(r)
    return FoldPlan(
        k=k,
        folds=tuple(np.sort(np.asarray(f, dtype=np.int64)) for f in folds),
        seed=seed,
    )


@dataclass(frozen=True)
class FoldMetrics:
    grid_index: int
    fold: int
    f2: float
    pr_auc: float


@dataclass(frozen=True)
class GridSearchResult:
    best_index: int
    best_config: boost.TrainConfig
    fold_metrics: tuple
    mean_f2: tuple
    mean_pr_auc: tuple


def select_best(mean_f2: list, mean_pr_auc: list) -> int:
    """Lexicographic selection: F2, then PR-AUC, then declaration order."""
    best = 0
    for gi in range(1, len(mean_f2)):
        if (mean_f2[gi], mean_pr_auc[gi]) > (mean_f2[best], mean_pr_auc[best]):
            best = gi
    return best


def grid_search(
    X: np.ndarray,
    labels: np.ndarray,
    grid: list,
    fold_plan: FoldPlan,
    resample_plan: resample.ResamplePlan,
    schema: FeatureSchema,
    threshold: float = DEFAULT_THRESHOLD,
) -> GridSearchResult:
    """Cross-validated sweep over configs, selecting by F2 then PR-AUC.

    Resampling is applied to each fold's training part only; the fold's
    held-out part is scored untouched. The report carries per-fold F2
    and PR-AUC for every grid point.
    """
    if not grid:
        raise ValidationError("hyperparameter grid is empty")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    all_rows = np.arange(len(y))
    by_point: dict[int, list[FoldMetrics]] = {gi: [] for gi in range(len(grid))}
    for fi, held in enumerate(fold_plan.folds):
        train_rows = np.setdiff1d(all_rows, held, assume_unique=False)
        # one balanced training set per fold, shared by every grid point,
        # with a fold seed derived deterministically from the plan seed
        fold_seed = int(
            np.random.SeedSequence([resample_plan.seed, fi]).generate_state(1)[0]
        )
        bx, by = resample.balance(
            X[train_rows], y[train_rows],
            resample_plan.replaced(seed=fold_seed), schema,
        )
        for gi, config in enumerate(grid):
            model = boost.train(bx, by, config)
            scores = model.predict(X[held])
            c = confusion_counts(y[held], scores, threshold)
            by_point[gi].append(FoldMetrics(
                grid_index=gi,
                fold=fi,
                f2=f2(c),
                pr_auc=pr_auc(scores, y[held]),
            ))
    fold_metrics = [fm for gi in range(len(grid)) for fm in by_point[gi]]
    means_f2 = [float(np.mean([fm.f2 for fm in by_point[gi]])) for gi in range(len(grid))]
    means_ap = [float(np.mean([fm.pr_auc for fm in by_point[gi]])) for gi in range(len(grid))]

    best = select_best(means_f2, means_ap)
    return GridSearchResult(
        best_index=best,
        best_config=grid[best],
        fold_metrics=tuple(fold_metrics),
        mean_f2=tuple(means_f2),
        mean_pr_auc=tuple(means_ap),
    )
