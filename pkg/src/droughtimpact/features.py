"""Design matrix assembly, impact labels, category pruning, and splits.

Rows are (region, month) pairs inside the study window whose SPI values
are all defined (warm-up months are dropped, not imputed). Columns are
the five SPI scales followed by one-hot groups for season, month, and
the four regional attributes. Column order is fully determined by the
input vocabularies, so two runs over the same files produce identical
matrices.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .ingest import CATEGORIES, ImpactRecord, RegionAttributes
from .months import SEASONS, calendar_month, season_of
from .spi import SpiSeries

logger = logging.getLogger(__name__)

SPI_COLUMNS = ("spi1", "spi3", "spi6", "spi9", "spi12")

#: Default train/validation/test fractions.
DEFAULT_FRACTIONS = (0.6, 0.2, 0.2)

#: Categories below this positive proportion are pruned (strict less-than).
DEFAULT_PRUNE_THRESHOLD = 0.05


@dataclass(frozen=True)
class FeatureSchema:
    """Column layout: names, numeric column indices, and one-hot groups."""

    column_names: tuple[str, ...]
    numeric_columns: tuple[int, ...]
    onehot_groups: tuple[tuple[str, tuple[int, ...]], ...]

    def to_dict(self) -> dict:
        return {
            "column_names": list(self.column_names),
            "numeric_columns": list(self.numeric_columns),
            "onehot_groups": [[name, list(idx)] for name, idx in self.onehot_groups],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureSchema":
        return cls(
            column_names=tuple(d["column_names"]),
            numeric_columns=tuple(d["numeric_columns"]),
            onehot_groups=tuple((name, tuple(idx)) for name, idx in d["onehot_groups"]),
        )


@dataclass(frozen=True)
class DesignMatrix:
    """Feature rows aligned with (region, month) keys."""

    values: np.ndarray
    schema: FeatureSchema
    row_regions: tuple[str, ...]
    row_months: np.ndarray

    @property
    def column_names(self) -> tuple[str, ...]:
        return self.schema.column_names

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class LabelVector:
    """Binary presence/absence labels for one category, row-aligned."""

    category: str
    values: np.ndarray

    @property
    def positive_fraction(self) -> float:
        return float(self.values.mean())


@dataclass(frozen=True)
class SplitSet:
    """Disjoint row-index sets covering all rows."""

    train: np.ndarray
    validation: np.ndarray
    test: np.ndarray
    seed: int


def one_hot(classes, vocabulary, prefix: str) -> tuple[np.ndarray, list[str]]:
    """Indicator columns for ``classes`` over a closed ``vocabulary``.

    Every row gets exactly one 1 within the group; a class outside the
    vocabulary is an error.
    """
    vocabulary = list(vocabulary)
    index = {c: j for j, c in enumerate(vocabulary)}
    out = np.zeros((len(classes), len(vocabulary)))
    for i, c in enumerate(classes):
        j = index.get(c)
        if j is None:
            raise ValidationError(
                f"class {c!r} not in vocabulary for group {prefix!r}: {vocabulary}"
            )
        out[i, j] = 1.0
    names = [f"{prefix}_{c}" for c in vocabulary]
    return out, names


def build_design_matrix(
    spi_by_region: dict[str, dict[int, SpiSeries]],
    regions: dict[str, RegionAttributes],
    study_start: int,
    study_end: int,
) -> DesignMatrix:
    """Assemble SPI and one-hot features for every usable (region, month).

    ``study_start``/``study_end`` are inclusive flat month indices. Rows
    whose SPI is undefined at any window (warm-up) are dropped. Regions
    are taken from ``spi_by_region``; each must have attributes.
    """
    if study_end < study_start:
        raise ValidationError("study window is empty")
    row_regions: list[str] = []
    row_months: list[int] = []
    spi_rows: list[list[float]] = []
    for region_id in sorted(spi_by_region):
        series = spi_by_region[region_id]
        if region_id not in regions:
            raise ValidationError(f"region {region_id} has SPI but no attributes")
        windows = sorted(series)
        for month in range(study_start, study_end + 1):
            row = []
            for w in windows:
                s = series[w]
                offset = month - s.start
                row.append(
                    s.values[offset] if 0 <= offset < len(s.values) else np.nan
                )
            if np.any(np.isnan(row)):
                continue
            row_regions.append(region_id)
            row_months.append(month)
            spi_rows.append(row)
    if not spi_rows:
        raise ValidationError("no rows with fully defined SPI in the study window")

    spi_block = np.asarray(spi_rows)
    cal_months = [calendar_month(m) for m in row_months]
    blocks = [spi_block]
    names = [f"spi{w}" for w in sorted(next(iter(spi_by_region.values())))]
    numeric = tuple(range(len(names)))
    groups: list[tuple[str, tuple[int, ...]]] = []

    def add_group(group_name, classes, vocabulary):
        block, block_names = one_hot(classes, vocabulary, group_name)
        start = sum(b.shape[1] for b in blocks)
        blocks.append(block)
        names.extend(block_names)
        groups.append((group_name, tuple(range(start, start + block.shape[1]))))

    add_group("season", [season_of(cm) for cm in cal_months], SEASONS)
    add_group("month", [f"{cm:02d}" for cm in cal_months], [f"{m:02d}" for m in range(1, 13)])
    for attr in ("lc", "phr", "rwpd", "taesd"):
        classes = [getattr(regions[r], attr) for r in row_regions]
        vocabulary = sorted({getattr(a, attr) for a in regions.values()})
        add_group(attr, classes, vocabulary)

    schema = FeatureSchema(
        column_names=tuple(names),
        numeric_columns=numeric,
        onehot_groups=tuple(groups),
    )
    return DesignMatrix(
        values=np.hstack(blocks),
        schema=schema,
        row_regions=tuple(row_regions),
        row_months=np.asarray(row_months, dtype=np.int64),
    )


def summarize_impacts(
    records: list[ImpactRecord], matrix: DesignMatrix
) -> dict[str, LabelVector]:
    """Binary label per category: 1 iff any report count > 0 that region-month.

    Missing records mean absence; every known category gets a vector.
    """
    totals: dict[str, dict[tuple[str, int], int]] = {c: {} for c in CATEGORIES}
    for r in records:
        key = (r.region_id, r.month)
        per = totals[r.category]
        per[key] = per.get(key, 0) + r.count
    out = {}
    keys = list(zip(matrix.row_regions, matrix.row_months.tolist()))
    for category in CATEGORIES:
        per = totals[category]
        values = np.fromiter(
            (1 if per.get(k, 0) > 0 else 0 for k in keys), dtype=np.int8, count=len(keys)
        )
        out[category] = LabelVector(category=category, values=values)
    return out


def prune_categories(
    labels: dict[str, LabelVector], threshold: float = DEFAULT_PRUNE_THRESHOLD
) -> dict[str, LabelVector]:
    """Drop categories whose positive proportion is strictly below ``threshold``.

    A category at exactly the threshold is retained. Removals are logged.
    """
    if not 0.0 < threshold < 1.0:
        raise ValidationError(f"prune threshold must be in (0, 1), got {threshold}")
    kept = {}
    for category, vector in labels.items():
        fraction = vector.positive_fraction
        if fraction < threshold:
            logger.info(
                "dropping category %s: positive fraction %.4f below %.2f",
                category, fraction, threshold,
            )
        else:
            kept[category] = vector
    return kept


def _apportion(total: int, weights: np.ndarray) -> np.ndarray:
    """Largest-remainder apportionment of ``total`` items by ``weights``."""
    quotas = weights / weights.sum() * total
    counts = np.floor(quotas).astype(np.int64)
    remainder = total - counts.sum()
    if remainder > 0:
        order = np.argsort(-(quotas - counts), kind="stable")
        counts[order[:remainder]] += 1
    return counts


def stratified_split(
    labels: LabelVector,
    fractions=DEFAULT_FRACTIONS,
    seed: int = 0,
) -> SplitSet:
    """Stratified train/validation/test split by row index.

    Positives and negatives are shuffled separately and dealt so that
    each split's positive rate is within one sample of the overall rate.
    All three splits must end up nonempty with at least one positive.
    """
    fractions = np.asarray(fractions, dtype=np.float64)
    if len(fractions) != 3 or np.any(fractions <= 0) or abs(fractions.sum() - 1.0) > 1e-9:
        raise ValidationError(
            f"fractions must be three positive numbers summing to 1, got {tuple(fractions)}"
        )
    y = np.asarray(labels.values)
    n = len(y)
    pos = np.flatnonzero(y == 1)
    neg = np.flatnonzero(y == 0)
    rng = np.random.default_rng(seed)
    pos = rng.permutation(pos)
    neg = rng.permutation(neg)

    sizes = _apportion(n, fractions)
    # quotas sizes[k] * P / n keep each split's positive rate within one
    # sample of the overall rate after largest-remainder rounding
    pos_counts = _apportion(len(pos), sizes.astype(np.float64))
    if np.any(pos_counts == 0) or np.any(sizes - pos_counts == 0):
        raise ValidationError(
            f"category {labels.category}: a split would receive zero positives or "
            f"zero negatives; merge categories or choose different fractions"
        )
    splits = []
    p0 = n0 = 0
    for k in range(3):
        p1, n1 = p0 + pos_counts[k], n0 + (sizes[k] - pos_counts[k])
        splits.append(np.sort(np.concatenate([pos[p0:p1], neg[n0:n1]])))
        p0, n0 = p1, n1
    return SplitSet(train=splits[0], validation=splits[1], test=splits[2], seed=seed)
