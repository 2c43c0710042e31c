"""Gradient-boosted decision trees with the second-order logistic objective.

Each round fits a regression tree to the gradient/hessian statistics of
the binary cross-entropy loss, with L2-regularized leaf weights
``-G / (H + lambda)``, a minimum split gain ``gamma``, a depth cap, a
hessian floor per child (``min_child_weight``), and cost-sensitive
positive weighting (``scale_pos_weight`` multiplies g and h of positive
rows). Split finding is exact greedy over midpoints between consecutive
distinct sorted feature values; rows with a missing (NaN) feature follow
a learned default branch chosen by trying both sides during the search.

There is no stochastic subsampling, and ties in split gain are broken by
lowest feature index, then lowest threshold, then default-left, so
training is fully deterministic: the same data and config produce
bit-identical ensembles.

The inner split scan and node partition run as numba kernels over
per-feature presorted row indices; sort order is computed once per
training run and filtered down the tree, never re-sorted.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from numba import njit
from scipy.special import expit, logit

from .errors import ValidationError

#: Ensembles predict probabilities; margins live on the log-odds scale.
MODEL_FORMAT_VERSION = "gbtree v1"

_LEAF = -1


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for one training run.

    ``lam`` is the L2 regularization strength (the boosting "lambda").
    ``seed`` is carried for config provenance; training itself has no
    stochastic steps.
    """

    eta: float = 0.3
    n_rounds: int = 50
    max_depth: int = 3
    gamma: float = 0.0
    lam: float = 1.0
    scale_pos_weight: float = 1.0
    base_score: float = 0.5
    min_child_weight: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.eta <= 1.0:
            raise ValidationError(f"eta must be in (0, 1], got {self.eta}")
        if self.n_rounds < 0:
            raise ValidationError(f"n_rounds must be >= 0, got {self.n_rounds}")
        if self.max_depth < 1:
            raise ValidationError(f"max_depth must be >= 1, got {self.max_depth}")
        if self.gamma < 0 or self.lam < 0:
            raise ValidationError("gamma and lambda must be >= 0")
        if self.scale_pos_weight <= 0:
            raise ValidationError(
                f"scale_pos_weight must be > 0, got {self.scale_pos_weight}"
            )
        if not 0.0 < self.base_score < 1.0:
            raise ValidationError(
                f"base_score must be a probability in (0, 1), got {self.base_score}"
            )
        if self.min_child_weight < 0:
            raise ValidationError("min_child_weight must be >= 0")

    def replaced(self, **kw) -> "TrainConfig":
        return replace(self, **kw)


@dataclass
class Tree:
    """One regression tree as flat parallel arrays.

    ``feature[i] == -1`` marks a leaf. ``cover`` is the hessian sum of
    the training rows routed through each node, aggregated bottom-up so
    that ``cover[parent] == cover[left] + cover[right]`` holds exactly.
    ``gain`` and ``grad_sum`` are training diagnostics (NaN after a
    serialization round trip).
    """

    parent: np.ndarray
    children_left: np.ndarray
    children_right: np.ndarray
    default_left: np.ndarray
    feature: np.ndarray
    threshold: np.ndarray
    value: np.ndarray
    cover: np.ndarray
    gain: np.ndarray
    grad_sum: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def leaf_indices(self, X: np.ndarray) -> np.ndarray:
        """Leaf node index for every row; NaN features take the default branch."""
        X = np.asarray(X, dtype=np.float64)
        node = np.zeros(len(X), dtype=np.int64)
        active = np.flatnonzero(self.feature[node] >= 0)
        while active.size:
            nd = node[active]
            f = self.feature[nd]
            x = X[active, f]
            left = x < self.threshold[nd]
            missing = np.isnan(x)
            left = np.where(missing, self.default_left[nd], left)
            node[active] = np.where(left, self.children_left[nd], self.children_right[nd])
            active = active[self.feature[node[active]] >= 0]
        return node

    def leaf_values(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.leaf_indices(X)]


@dataclass
class Ensemble:
    """Additive tree model: margin(x) = logit(base_score) + eta * sum of leaves."""

    base_score: float
    eta: float
    n_features: int
    trees: list = field(default_factory=list)

    def margin(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        out = np.full(len(X), logit(self.base_score))
        for tree in self.trees:
            out += self.eta * tree.leaf_values(X)
        return out

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Probability of the positive class per row."""
        return expit(self.margin(X))

    def save(self, path) -> None:
        Path(path).write_text(dumps(self), encoding="utf-8")


def grad_hess(
    labels: np.ndarray, margins: np.ndarray, scale_pos_weight: float = 1.0
) -> tuple[np.ndarray, np.ndarray]:
    """Gradient and hessian of weighted binary cross-entropy at the margins.

    g = w * (p - y), h = w * p * (1 - p) with p = sigmoid(margin) and
    w = scale_pos_weight for positive rows, 1 otherwise.
    """
    y = np.asarray(labels, dtype=np.float64)
    p = expit(np.asarray(margins, dtype=np.float64))
    w = np.where(y == 1.0, scale_pos_weight, 1.0)
    return w * (p - y), w * p * (1.0 - p)


def leaf_weight(G: float, H: float, lam: float) -> float:
    """Optimal leaf weight -G / (H + lambda)."""
    return -G / (H + lam)


def split_gain(
    G_L: float, H_L: float, G_R: float, H_R: float, lam: float, gamma: float
) -> float:
    """Loss reduction of a split, minus the pruning penalty gamma."""
    return 0.5 * (
        G_L * G_L / (H_L + lam)
        + G_R * G_R / (H_R + lam)
        - (G_L + G_R) ** 2 / (H_L + H_R + lam)
    ) - gamma


@njit(cache=True)
def _best_split_kernel(XT, srT, g, h, lam, gamma, mcw):  # pragma: no cover
    """Exact greedy scan over all features and distinct-value midpoints.

    ``XT`` is the transposed feature matrix (features x all rows);
    ``srT[f]`` lists this node's rows sorted ascending by feature f with
    NaN rows last. Returns (gain, feature, threshold, default_left as
    0/1); feature -1 when no candidate has positive gain. Candidates are
    scanned in (feature, threshold, default-left-first) order with
    strict improvement, which fixes tie-breaking.
    """
    m, n = srT.shape
    Gt = 0.0
    Ht = 0.0
    for i in range(n):
        r = srT[0, i]
        Gt += g[r]
        Ht += h[r]
    parent = Gt * Gt / (Ht + lam)

    best_gain = 0.0
    best_feature = -1
    best_threshold = np.nan
    best_default_left = 1
    for f in range(m):
        row = srT[f]
        col = XT[f]
        n_fin = n
        Gf = 0.0
        Hf = 0.0
        for i in range(n):
            x = col[row[i]]
            if np.isnan(x):
                n_fin = i
                break
            Gf += g[row[i]]
            Hf += h[row[i]]
        Gm = Gt - Gf
        Hm = Ht - Hf
        has_missing = n_fin < n

        GL = 0.0
        HL = 0.0
        for i in range(n_fin - 1):
            r = row[i]
            GL += g[r]
            HL += h[r]
            x0 = col[r]
            x1 = col[row[i + 1]]
            if x0 >= x1:
                continue
            mid = 0.5 * (x0 + x1)
            thr = mid if mid > x0 else x1

            # default left: missing rows join the left child
            gl = GL + Gm
            hl = HL + Hm
            if hl >= mcw and Ht - hl >= mcw:
                gr = Gt - gl
                gain = 0.5 * (gl * gl / (hl + lam) + gr * gr / (Ht - hl + lam) - parent) - gamma
                if gain > best_gain:
                    best_gain = gain
                    best_feature = f
                    best_threshold = thr
                    best_default_left = 1
            if has_missing:
                # default right: missing rows join the right child
                if HL >= mcw and Ht - HL >= mcw:
                    gr = Gt - GL
                    gain = 0.5 * (GL * GL / (HL + lam) + gr * gr / (Ht - HL + lam) - parent) - gamma
                    if gain > best_gain:
                        best_gain = gain
                        best_feature = f
                        best_threshold = thr
                        best_default_left = 0
    return best_gain, best_feature, best_threshold, best_default_left


@njit(cache=True)
def _partition_kernel(srT, left_mask):  # pragma: no cover
    """Split per-feature sorted row lists into left/right, preserving order."""
    m, n = srT.shape
    nl = 0
    for i in range(n):
        if left_mask[srT[0, i]]:
            nl += 1
    L = np.empty((m, nl), np.int32)
    R = np.empty((m, n - nl), np.int32)
    for f in range(m):
        a = 0
        b = 0
        for i in range(n):
            r = srT[f, i]
            if left_mask[r]:
                L[f, a] = r
                a += 1
            else:
                R[f, b] = r
                b += 1
    return L, R


class _TreeBuilder:
    """Accumulates flat node arrays during recursive growth."""

    def __init__(self, X, XT, g, h, config):
        self.X = X
        self.XT = XT
        self.g = g
        self.h = h
        self.cfg = config
        self.parent = []
        self.children_left = []
        self.children_right = []
        self.default_left = []
        self.feature = []
        self.threshold = []
        self.value = []
        self.cover = []
        self.gain = []
        self.grad_sum = []
        self.leaf_weight_per_row = np.zeros(len(g))

    def _alloc(self, parent_id):
        node_id = len(self.feature)
        self.parent.append(parent_id)
        self.children_left.append(_LEAF)
        self.children_right.append(_LEAF)
        self.default_left.append(True)
        self.feature.append(_LEAF)
        self.threshold.append(np.nan)
        self.value.append(0.0)
        self.cover.append(0.0)
        self.gain.append(np.nan)
        self.grad_sum.append(0.0)
        return node_id

    def grow(self, srT, depth, parent_id):
        node_id = self._alloc(parent_id)
        rows = srT[0]
        G = float(self.g[rows].sum())
        H = float(self.h[rows].sum())

        split = None
        if depth < self.cfg.max_depth and len(rows) >= 2:
            gain, f, thr, dleft = _best_split_kernel(
                self.XT, srT, self.g, self.h,
                self.cfg.lam, self.cfg.gamma, self.cfg.min_child_weight,
            )
            if f >= 0 and gain > 0.0:
                split = (f, thr, bool(dleft))

        if split is None:
            w = leaf_weight(G, H, self.cfg.lam)
            self.value[node_id] = w
            self.cover[node_id] = H
            self.grad_sum[node_id] = G
            self.leaf_weight_per_row[rows] = w
            return node_id

        f, thr, dleft = split
        x = self.X[rows, f]
        go_left = x < thr
        missing = np.isnan(x)
        if missing.any():
            go_left = np.where(missing, dleft, go_left)
        left_mask = np.zeros(len(self.g), dtype=np.bool_)
        left_mask[rows[go_left]] = True
        srT_left, srT_right = _partition_kernel(srT, left_mask)

        self.feature[node_id] = f
        self.threshold[node_id] = thr
        self.default_left[node_id] = dleft
        left_id = self.grow(srT_left, depth + 1, node_id)
        right_id = self.grow(srT_right, depth + 1, node_id)
        self.children_left[node_id] = left_id
        self.children_right[node_id] = right_id
        # bottom-up aggregates keep cover(parent) == cover(left) + cover(right)
        # exact; gain recorded from the same aggregates is reproducible
        self.cover[node_id] = self.cover[left_id] + self.cover[right_id]
        self.grad_sum[node_id] = self.grad_sum[left_id] + self.grad_sum[right_id]
        self.gain[node_id] = split_gain(
            self.grad_sum[left_id], self.cover[left_id],
            self.grad_sum[right_id], self.cover[right_id],
            self.cfg.lam, self.cfg.gamma,
        )
        return node_id

    def finish(self) -> Tree:
        return Tree(
            parent=np.array(self.parent, dtype=np.int32),
            children_left=np.array(self.children_left, dtype=np.int32),
            children_right=np.array(self.children_right, dtype=np.int32),
            default_left=np.array(self.default_left, dtype=np.bool_),
            feature=np.array(self.feature, dtype=np.int32),
            threshold=np.array(self.threshold, dtype=np.float64),
            value=np.array(self.value, dtype=np.float64),
            cover=np.array(self.cover, dtype=np.float64),
            gain=np.array(self.gain, dtype=np.float64),
            grad_sum=np.array(self.grad_sum, dtype=np.float64),
        )


def _presort(X: np.ndarray) -> np.ndarray:
    """Per-feature ascending row order, NaN last, transposed and contiguous."""
    return np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").astype(np.int32).T)


def build_tree(
    X: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    config: TrainConfig,
    _srT: np.ndarray | None = None,
    _XT: np.ndarray | None = None,
) -> Tree:
    """Grow one tree on gradient/hessian statistics."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or len(X) == 0:
        raise ValidationError("feature matrix must be 2-D and nonempty")
    XT = np.ascontiguousarray(X.T) if _XT is None else _XT
    srT = _presort(X) if _srT is None else _srT
    builder = _TreeBuilder(X, XT, np.asarray(g, dtype=np.float64),
                           np.asarray(h, dtype=np.float64), config)
    builder.grow(srT, 0, _LEAF)
    return builder.finish()


def train(X: np.ndarray, y: np.ndarray, config: TrainConfig) -> Ensemble:
    """Boost ``config.n_rounds`` trees on sequentially updated margins."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or len(X) != len(y):
        raise ValidationError("matrix and labels must align")
    if not np.all((y == 0.0) | (y == 1.0)):
        raise ValidationError("labels must be binary 0/1")
    ensemble = Ensemble(base_score=config.base_score, eta=config.eta,
                        n_features=X.shape[1])
    if config.n_rounds == 0:
        return ensemble
    XT = np.ascontiguousarray(X.T)
    srT = _presort(X)
    margins = np.full(len(y), logit(config.base_score))
    for _ in range(config.n_rounds):
        g, h = grad_hess(y, margins, config.scale_pos_weight)
        builder = _TreeBuilder(X, XT, g, h, config)
        builder.grow(srT, 0, _LEAF)
        ensemble.trees.append(builder.finish())
        margins += config.eta * builder.leaf_weight_per_row
    return ensemble


def _fmt(x: float) -> str:
    """Shortest decimal that round-trips the exact float64 value."""
    return repr(float(x))


def dumps(ensemble: Ensemble) -> str:
    """Serialize to the documented text format, one node per line.

    Node line columns: id, parent, type, feature, threshold, default,
    weight, cover; '-' fills columns a node type does not use. For each
    internal node the left child's line appears before the right
    child's.
    """
    lines = [
        MODEL_FORMAT_VERSION,
        f"base_score {_fmt(ensemble.base_score)}",
        f"eta {_fmt(ensemble.eta)}",
        f"n_features {ensemble.n_features}",
        f"n_trees {len(ensemble.trees)}",
    ]
    for t, tree in enumerate(ensemble.trees):
        lines.append(f"tree {t} {tree.n_nodes}")
        for i in range(tree.n_nodes):
            if tree.feature[i] < 0:
                lines.append(
                    f"{i} {tree.parent[i]} leaf -1 - - "
                    f"{_fmt(tree.value[i])} {_fmt(tree.cover[i])}"
                )
            else:
                d = "L" if tree.default_left[i] else "R"
                lines.append(
                    f"{i} {tree.parent[i]} split {tree.feature[i]} "
                    f"{_fmt(tree.threshold[i])} {d} - {_fmt(tree.cover[i])}"
                )
    return "\n".join(lines) + "\n"


def loads(text: str) -> Ensemble:
    """Parse the text format back into an ensemble.

    Predictions of the reloaded model are bit-identical to the original;
    training diagnostics (gain, grad_sum) are not stored and come back
    as NaN.
    """
    lines = text.strip("\n").split("\n")
    if not lines or lines[0] != MODEL_FORMAT_VERSION:
        raise ValidationError(
            f"unsupported model format: expected {MODEL_FORMAT_VERSION!r}"
        )

    def keyed(line, key):
        parts = line.split()
        if len(parts) != 2 or parts[0] != key:
            raise ValidationError(f"malformed model header line {line!r}")
        return parts[1]

    base_score = float(keyed(lines[1], "base_score"))
    eta = float(keyed(lines[2], "eta"))
    n_features = int(keyed(lines[3], "n_features"))
    n_trees = int(keyed(lines[4], "n_trees"))
    ensemble = Ensemble(base_score=base_score, eta=eta, n_features=n_features)

    pos = 5
    for t in range(n_trees):
        head = lines[pos].split()
        if len(head) != 3 or head[0] != "tree" or int(head[1]) != t:
            raise ValidationError(f"malformed tree header {lines[pos]!r}")
        n_nodes = int(head[2])
        pos += 1
        parent = np.full(n_nodes, _LEAF, dtype=np.int32)
        children_left = np.full(n_nodes, _LEAF, dtype=np.int32)
        children_right = np.full(n_nodes, _LEAF, dtype=np.int32)
        default_left = np.zeros(n_nodes, dtype=np.bool_)
        feature = np.full(n_nodes, _LEAF, dtype=np.int32)
        threshold = np.full(n_nodes, np.nan)
        value = np.zeros(n_nodes)
        cover = np.zeros(n_nodes)
        for _ in range(n_nodes):
            parts = lines[pos].split()
            pos += 1
            if len(parts) != 8:
                raise ValidationError(f"malformed node line {lines[pos - 1]!r}")
            i, par, kind = int(parts[0]), int(parts[1]), parts[2]
            parent[i] = par
            if par >= 0:
                # first child listed for a parent is the left child
                if children_left[par] == _LEAF:
                    children_left[par] = i
                else:
                    children_right[par] = i
            if kind == "leaf":
                value[i] = float(parts[6])
                cover[i] = float(parts[7])
            elif kind == "split":
                feature[i] = int(parts[3])
                threshold[i] = float(parts[4])
                default_left[i] = parts[5] == "L"
                cover[i] = float(parts[7])
            else:
                raise ValidationError(f"unknown node type {kind!r}")
        ensemble.trees.append(Tree(
            parent=parent,
            children_left=children_left,
            children_right=children_right,
            default_left=default_left,
            feature=feature,
            threshold=threshold,
            value=value,
            cover=cover,
            gain=np.full(n_nodes, np.nan),
            grad_sum=np.full(n_nodes, np.nan),
        ))
    return ensemble


def load(path) -> Ensemble:
    return loads(Path(path).read_text(encoding="utf-8"))


def logloss(labels: np.ndarray, probabilities: np.ndarray) -> float:
    """Mean binary cross-entropy; clipped away from 0/1 for stability."""
    y = np.asarray(labels, dtype=np.float64)
    p = np.clip(np.asarray(probabilities, dtype=np.float64), 1e-15, 1.0 - 1e-15)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))
