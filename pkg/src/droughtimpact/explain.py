"""Exact path-dependent TreeSHAP attributions and main-effect series.

Attribution is on the margin (log-odds) scale, where additivity is
exact: for every row, base_value + sum of per-feature values equals the
ensemble margin. The value function is the classic cover-weighted
conditional expectation — descending both children of a split on an
out-of-coalition feature, weighted by cover fractions — so no background
dataset is needed at explain time.

Shapley values come from the polynomial-time path algorithm; pairwise
interaction values come from the same algorithm run with one feature
forced present versus forced absent, halved. The main effect of a
feature is its Shapley value minus all its pairwise interactions.

The per-row recursion is JIT-compiled; the first call in a process pays
a one-off compile cost that is cached on disk.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.special import logit

from .boost import Ensemble
from .errors import ValidationError
from .features import DesignMatrix


@dataclass(frozen=True)
class ShapMatrix:
    """Per-row, per-feature attributions plus the shared base value."""

    values: np.ndarray
    base_value: float


@dataclass(frozen=True)
class MainEffectSeries:
    """Per-row (feature value, main effect) pairs for one feature."""

    feature: int
    feature_values: np.ndarray
    effects: np.ndarray


@dataclass(frozen=True)
class FeatureRanking:
    """Feature order by descending mean |attribution|, ties by index."""

    order: np.ndarray
    mean_abs: np.ndarray


@dataclass(frozen=True)
class _FlatForest:
    """All trees of an ensemble as concatenated node arrays.

    ``value`` holds eta-scaled leaf weights at leaves and cover-weighted
    subtree expectations at internal nodes; ``offsets`` delimits trees.
    """

    children_left: np.ndarray
    children_right: np.ndarray
    children_default: np.ndarray
    feature: np.ndarray
    threshold: np.ndarray
    value: np.ndarray
    cover: np.ndarray
    offsets: np.ndarray
    max_depth: int


def _flatten(ensemble: Ensemble) -> _FlatForest:
    cl, cr, cd, ft, thr, val, cov = [], [], [], [], [], [], []
    offsets = [0]
    max_depth = 1
    for tree in ensemble.trees:
        if np.any(tree.cover <= 0):
            raise ValidationError("corrupt model: tree node with cover <= 0")
        n = tree.n_nodes
        base = offsets[-1]
        cl.append(np.where(tree.children_left >= 0, tree.children_left + base, -1))
        cr.append(np.where(tree.children_right >= 0, tree.children_right + base, -1))
        cd.append(np.where(
            tree.children_left >= 0,
            np.where(tree.default_left, tree.children_left, tree.children_right) + base,
            -1,
        ))
        ft.append(tree.feature)
        thr.append(tree.threshold)
        values = np.where(tree.feature < 0, ensemble.eta * tree.value, 0.0)
        # cover-weighted expectations at internal nodes, computed leaf-up
        depth = np.zeros(n, dtype=np.int64)
        for i in range(n - 1, -1, -1):
            left, right = tree.children_left[i], tree.children_right[i]
            if left >= 0:
                values[i] = (
                    tree.cover[left] * values[left] + tree.cover[right] * values[right]
                ) / (tree.cover[left] + tree.cover[right])
                depth[i] = 1 + max(depth[left], depth[right])
        max_depth = max(max_depth, int(depth[0]) + 1)
        val.append(values)
        cov.append(tree.cover)
        offsets.append(base + n)
    if not ensemble.trees:
        empty = np.empty(0)
        empty_i = np.empty(0, dtype=np.int32)
        return _FlatForest(empty_i, empty_i, empty_i, empty_i, empty, empty, empty,
                           np.array([0], dtype=np.int64), 1)
    return _FlatForest(
        children_left=np.concatenate(cl).astype(np.int32),
        children_right=np.concatenate(cr).astype(np.int32),
        children_default=np.concatenate(cd).astype(np.int32),
        feature=np.concatenate(ft).astype(np.int32),
        threshold=np.concatenate(thr).astype(np.float64),
        value=np.concatenate(val).astype(np.float64),
        cover=np.concatenate(cov).astype(np.float64),
        offsets=np.asarray(offsets, dtype=np.int64),
        max_depth=max_depth,
    )


@njit(cache=True)
def _extend(fidx, zero, one, pweight, off, depth, zero_fraction, one_fraction, feature):  # pragma: no cover
    fidx[off + depth] = feature
    zero[off + depth] = zero_fraction
    one[off + depth] = one_fraction
    pweight[off + depth] = 1.0 if depth == 0 else 0.0
    for i in range(depth - 1, -1, -1):
        pweight[off + i + 1] += one_fraction * pweight[off + i] * (i + 1.0) / (depth + 1.0)
        pweight[off + i] = zero_fraction * pweight[off + i] * (depth - i) / (depth + 1.0)


@njit(cache=True)
def _unwind(fidx, zero, one, pweight, off, depth, index):  # pragma: no cover
    one_fraction = one[off + index]
    zero_fraction = zero[off + index]
    next_one = pweight[off + depth]
    for i in range(depth - 1, -1, -1):
        if one_fraction != 0.0:
            tmp = pweight[off + i]
            pweight[off + i] = next_one * (depth + 1.0) / ((i + 1.0) * one_fraction)
            next_one = tmp - pweight[off + i] * zero_fraction * (depth - i) / (depth + 1.0)
        else:
            pweight[off + i] = pweight[off + i] * (depth + 1.0) / (zero_fraction * (depth - i))
    for i in range(index, depth):
        fidx[off + i] = fidx[off + i + 1]
        zero[off + i] = zero[off + i + 1]
        one[off + i] = one[off + i + 1]


@njit(cache=True)
def _unwound_sum(zero, one, pweight, off, depth, index):  # pragma: no cover
    one_fraction = one[off + index]
    zero_fraction = zero[off + index]
    next_one = pweight[off + depth]
    total = 0.0
    for i in range(depth - 1, -1, -1):
        if one_fraction != 0.0:
            tmp = next_one * (depth + 1.0) / ((i + 1.0) * one_fraction)
            total += tmp
            next_one = pweight[off + i] - tmp * zero_fraction * (depth - i) / (depth + 1.0)
        else:
            total += (pweight[off + i] / zero_fraction) / ((depth - i) / (depth + 1.0))
    return total


@njit(cache=True)
def _shap_batch(cl, cr, cd, ft, thr, val, cov, offsets, max_depth, X,
                condition, condition_feature):  # pragma: no cover
    """Iterative depth-first form of the path-dependent TreeSHAP recursion.

    Each traversal frame owns a region of the shared path buffers
    starting at its offset; a child's region begins right after its
    parent's live entries, and frames are processed LIFO, so a frame's
    path stays intact until both children have copied it.
    """
    n, m = X.shape
    phi = np.zeros((n, m))
    buf_size = (max_depth + 2) * (max_depth + 3) // 2
    fidx = np.empty(buf_size, np.int32)
    zero = np.empty(buf_size, np.float64)
    one = np.empty(buf_size, np.float64)
    pweight = np.empty(buf_size, np.float64)

    stack_size = 4 * (max_depth + 2)
    stk_node = np.empty(stack_size, np.int64)
    stk_depth = np.empty(stack_size, np.int64)
    stk_pzero = np.empty(stack_size, np.float64)
    stk_pone = np.empty(stack_size, np.float64)
    stk_pfeat = np.empty(stack_size, np.int64)
    stk_cfrac = np.empty(stack_size, np.float64)
    stk_poff = np.empty(stack_size, np.int64)
    stk_off = np.empty(stack_size, np.int64)

    for r in range(n):
        x = X[r]
        for t in range(len(offsets) - 1):
            stk_node[0] = offsets[t]
            stk_depth[0] = 0
            stk_pzero[0] = 1.0
            stk_pone[0] = 1.0
            stk_pfeat[0] = -1
            stk_cfrac[0] = 1.0
            stk_poff[0] = -1
            stk_off[0] = 0
            top = 1
            while top > 0:
                top -= 1
                node = stk_node[top]
                depth = stk_depth[top]
                pzero = stk_pzero[top]
                pone = stk_pone[top]
                pfeat = stk_pfeat[top]
                cfrac = stk_cfrac[top]
                poff = stk_poff[top]
                off = stk_off[top]
                if cfrac == 0.0:
                    continue
                if poff >= 0:
                    for i in range(depth + 1):
                        fidx[off + i] = fidx[poff + i]
                        zero[off + i] = zero[poff + i]
                        one[off + i] = one[poff + i]
                        pweight[off + i] = pweight[poff + i]
                if condition == 0 or condition_feature != pfeat:
                    _extend(fidx, zero, one, pweight, off, depth, pzero, pone, pfeat)

                split = ft[node]
                if cl[node] < 0:
                    for i in range(1, depth + 1):
                        w = _unwound_sum(zero, one, pweight, off, depth, i)
                        phi[r, fidx[off + i]] += (
                            w * (one[off + i] - zero[off + i]) * val[node] * cfrac
                        )
                    continue

                if np.isnan(x[split]):
                    hot = cd[node]
                elif x[split] < thr[node]:
                    hot = cl[node]
                else:
                    hot = cr[node]
                cold = cr[node] if hot == cl[node] else cl[node]
                w = cov[node]
                hot_zero = cov[hot] / w
                cold_zero = cov[cold] / w
                incoming_zero = 1.0
                incoming_one = 1.0

                # a prior split on the same feature is undone and folded in
                path_index = 0
                while path_index <= depth:
                    if fidx[off + path_index] == split:
                        break
                    path_index += 1
                if path_index != depth + 1:
                    incoming_zero = zero[off + path_index]
                    incoming_one = one[off + path_index]
                    _unwind(fidx, zero, one, pweight, off, depth, path_index)
                    depth -= 1

                hot_cfrac = cfrac
                cold_cfrac = cfrac
                if condition > 0 and split == condition_feature:
                    cold_cfrac = 0.0
                    depth -= 1
                elif condition < 0 and split == condition_feature:
                    hot_cfrac *= hot_zero
                    cold_cfrac *= cold_zero
                    depth -= 1

                # the child region starts one slot past this frame's last
                # live entry PLUS the slot its own extend may fill, exactly
                # like the recursive formulation's slice at depth_child + 1;
                # anything less lets the child's copy clobber an entry that
                # a skipped extend still needs
                child_off = off + depth + 2
                # cold pushed first so the hot subtree completes first (LIFO)
                stk_node[top] = cold
                stk_depth[top] = depth + 1
                stk_pzero[top] = cold_zero * incoming_zero
                stk_pone[top] = 0.0
                stk_pfeat[top] = split
                stk_cfrac[top] = cold_cfrac
                stk_poff[top] = off
                stk_off[top] = child_off
                top += 1
                stk_node[top] = hot
                stk_depth[top] = depth + 1
                stk_pzero[top] = hot_zero * incoming_zero
                stk_pone[top] = incoming_one
                stk_pfeat[top] = split
                stk_cfrac[top] = hot_cfrac
                stk_poff[top] = off
                stk_off[top] = child_off
                top += 1
    return phi


def _run(ensemble: Ensemble, X: np.ndarray, condition: int, condition_feature: int) -> np.ndarray:
    X = np.ascontiguousarray(np.asarray(X, dtype=np.float64))
    if X.ndim != 2:
        raise ValidationError("rows must be a 2-D matrix")
    forest = _flatten(ensemble)
    if len(ensemble.trees) == 0:
        return np.zeros_like(X)
    return _shap_batch(
        forest.children_left, forest.children_right, forest.children_default,
        forest.feature, forest.threshold, forest.value, forest.cover,
        forest.offsets, forest.max_depth, X,
        condition, condition_feature,
    )


def expected_margin(ensemble: Ensemble) -> float:
    """Cover-weighted expectation of the margin over the training distribution."""
    forest = _flatten(ensemble)
    roots = forest.offsets[:-1]
    return float(logit(ensemble.base_score) + forest.value[roots].sum())


def shap_values(ensemble: Ensemble, X: np.ndarray) -> ShapMatrix:
    """Exact path-dependent Shapley values on the margin scale.

    For every row, ``base_value + values.sum()`` equals the margin.
    """
    return ShapMatrix(values=_run(ensemble, X, 0, 0),
                      base_value=expected_margin(ensemble))


def interaction_values_for(ensemble: Ensemble, X: np.ndarray, feature: int) -> np.ndarray:
    """Pairwise interaction values phi_{feature,j} for all j, per row.

    Half the difference between attributions with ``feature`` forced
    present and forced absent; the ``feature`` column itself is zero.
    """
    on = _run(ensemble, X, 1, feature)
    off = _run(ensemble, X, -1, feature)
    out = 0.5 * (on - off)
    out[:, feature] = 0.0
    return out


def main_effects(ensemble: Ensemble, X: np.ndarray, feature: int) -> MainEffectSeries:
    """Main-effect series: phi_i minus all pairwise interactions of i."""
    X = np.asarray(X, dtype=np.float64)
    phi = shap_values(ensemble, X).values
    inter = interaction_values_for(ensemble, X, feature)
    effects = phi[:, feature] - inter.sum(axis=1)
    return MainEffectSeries(
        feature=feature,
        feature_values=X[:, feature].copy(),
        effects=effects,
    )


def summarize(
    shap: ShapMatrix, matrix: DesignMatrix
) -> tuple[FeatureRanking, dict[str, tuple[np.ndarray, np.ndarray]]]:
    """Rank features by mean |attribution| and collect SPI scatter data.

    One-hot indicator columns keep their attributions in the ranking but
    are excluded from the scatter output, which covers the numeric SPI
    features only.
    """
    mean_abs = np.abs(shap.values).mean(axis=0)
    order = np.lexsort((np.arange(len(mean_abs)), -mean_abs))
    ranking = FeatureRanking(order=order, mean_abs=mean_abs)
    scatter = {}
    for j in matrix.schema.numeric_columns:
        name = matrix.schema.column_names[j]
        scatter[name] = (matrix.values[:, j].copy(), shap.values[:, j].copy())
    return ranking, scatter
