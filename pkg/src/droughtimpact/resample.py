"""Class balancing for skewed categories: SMOTE then random undersampling.

Resampling triggers only when the positive class falls below 20% of the
training rows. SMOTE synthesizes minority rows on segments between
minority nearest neighbors; neighbor search uses Euclidean distance on
the numeric (SPI) columns only, so binary indicator distances cannot
dominate. Interpolated one-hot groups are snapped back to valid
indicator vectors by argmax within each group.

Only the training partition is ever balanced; validation and test data
never pass through this module.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .features import FeatureSchema

#: Positive-class proportion below which resampling is applied.
DEFAULT_TRIGGER = 0.20


@dataclass(frozen=True)
class ResamplePlan:
    """Parameters for the SMOTE + undersampling combination.

    ``oversample_ratio`` is the minority/majority ratio targeted by
    SMOTE, ``undersample_ratio`` the ratio targeted by undersampling the
    majority afterwards (1.0 = balanced), following the combination
    recommended in the SMOTE literature.
    """

    trigger_threshold: float = DEFAULT_TRIGGER
    smote_k: int = 5
    oversample_ratio: float = 0.5
    undersample_ratio: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.trigger_threshold <= 1.0:
            raise ValidationError(
                f"trigger_threshold must be in [0, 1], got {self.trigger_threshold}"
            )
        if self.smote_k < 1:
            raise ValidationError(f"smote_k must be >= 1, got {self.smote_k}")
        if not 0.0 < self.oversample_ratio <= self.undersample_ratio <= 1.0:
            raise ValidationError(
                "need 0 < oversample_ratio <= undersample_ratio <= 1, got "
                f"({self.oversample_ratio}, {self.undersample_ratio})"
            )

    def replaced(self, **kw) -> "ResamplePlan":
        from dataclasses import replace

        return replace(self, **kw)


def needs_resampling(labels: np.ndarray, threshold: float = DEFAULT_TRIGGER) -> bool:
    """True iff the positive proportion is strictly below the threshold."""
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ValidationError("empty label vector")
    return bool(labels.mean() < threshold)


def smote(
    minority: np.ndarray,
    k: int,
    n_synthetic: int,
    seed: int,
    schema: FeatureSchema,
) -> np.ndarray:
    """Synthesize ``n_synthetic`` minority rows by neighbor interpolation.

    Each synthetic row is x + u * (x_nn - x) with u uniform on [0, 1],
    x a random minority row and x_nn one of its k nearest minority
    neighbors on the numeric columns. One-hot groups are re-snapped to
    single-indicator form after interpolation.
    """
    minority = np.asarray(minority, dtype=np.float64)
    n = minority.shape[0]
    if n <= k:
        raise ValidationError(
            f"SMOTE needs more than k={k} minority rows, found {n}"
        )
    if n_synthetic == 0:
        return np.empty((0, minority.shape[1]))
    numeric = list(schema.numeric_columns)
    pts = minority[:, numeric]
    # squared Euclidean distances on numeric columns without the n^2*m
    # broadcast temporary; self excluded below
    sq = np.sum(pts * pts, axis=1)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * (pts @ pts.T), 0.0)
    np.fill_diagonal(d2, np.inf)
    neighbors = np.argsort(d2, axis=1, kind="stable")[:, :k]

    rng = np.random.default_rng(seed)
    base = rng.integers(0, n, size=n_synthetic)
    pick = rng.integers(0, k, size=n_synthetic)
    u = rng.random(n_synthetic)
    nn = neighbors[base, pick]
    synthetic = minority[base] + u[:, None] * (minority[nn] - minority[base])
    for _, idx in schema.onehot_groups:
        idx = list(idx)
        block = synthetic[:, idx]
        hot = np.argmax(block, axis=1)
        block[:] = 0.0
        block[np.arange(len(block)), hot] = 1.0
        synthetic[:, idx] = block
    return synthetic


def random_undersample(rows: np.ndarray, target_count: int, seed: int) -> np.ndarray:
    """Uniform sample of ``target_count`` rows without replacement.

    Retained rows keep their original relative order; sampling the full
    set is the identity.
    """
    rows = np.asarray(rows)
    n = rows.shape[0]
    if target_count > n:
        raise ValidationError(
            f"cannot undersample {n} rows down to {target_count}"
        )
    rng = np.random.default_rng(seed)
    keep = np.sort(rng.choice(n, size=target_count, replace=False))
    return rows[keep]


def balance(
    matrix: np.ndarray,
    labels: np.ndarray,
    plan: ResamplePlan,
    schema: FeatureSchema,
) -> tuple[np.ndarray, np.ndarray]:
    """Apply the plan to a training partition.

    When the positive proportion is below the trigger: SMOTE the
    minority up to ``oversample_ratio`` times the majority count, then
    undersample the majority down to minority/``undersample_ratio``.
    Otherwise the data passes through unchanged. Output rows are
    shuffled deterministically; every original minority row survives.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    labels = np.asarray(labels)
    if not needs_resampling(labels, plan.trigger_threshold):
        return matrix, labels

    pos_rows = matrix[labels == 1]
    neg_rows = matrix[labels == 0]
    n_pos, n_neg = len(pos_rows), len(neg_rows)

    target_pos = int(np.floor(plan.oversample_ratio * n_neg + 0.5))
    n_synthetic = max(0, target_pos - n_pos)
    synthetic = smote(pos_rows, plan.smote_k, n_synthetic, plan.seed, schema)
    all_pos = np.vstack([pos_rows, synthetic])

    target_neg = int(np.floor(len(all_pos) / plan.undersample_ratio + 0.5))
    if target_neg < n_neg:
        kept_neg = random_undersample(neg_rows, target_neg, plan.seed + 1)
    else:
        kept_neg = neg_rows

    out_x = np.vstack([all_pos, kept_neg])
    out_y = np.concatenate(
        [np.ones(len(all_pos), dtype=labels.dtype), np.zeros(len(kept_neg), dtype=labels.dtype)]
    )
    rng = np.random.default_rng(plan.seed + 2)
    order = rng.permutation(len(out_y))
    return out_x[order], out_y[order]
