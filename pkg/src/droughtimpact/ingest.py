"""Loaders and writers for the three tabular inputs.

File schemas (CSV, UTF-8, mandatory header row, dates as YYYY-MM):

* ``precip.csv``  — ``region_id,month,precip_mm``
* ``impacts.csv`` — ``region_id,month,category,count``
* ``regions.csv`` — ``region_id,lc,phr,rwpd,taesd``

Headers are enforced bit-exactly; unknown or reordered columns are
rejected so schema drift surfaces immediately. Row numbers in error
messages are 1-based file lines (the header is row 1).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ValidationError
from .months import format_month, parse_month

#: The nine impact report categories, in canonical order.
CATEGORIES = (
    "agriculture",
    "business_industry",
    "energy",
    "fire",
    "plants_wildlife",
    "relief_response_restrictions",
    "society_public_health",
    "tourism_recreation",
    "water_supply_quality",
)

PRECIP_HEADER = ("region_id", "month", "precip_mm")
IMPACTS_HEADER = ("region_id", "month", "category", "count")
REGIONS_HEADER = ("region_id", "lc", "phr", "rwpd", "taesd")


@dataclass(frozen=True)
class MonthlySeries:
    """Gap-free monthly precipitation depths for one region.

    ``values[i]`` belongs to the month ``start + i`` (flat month index).
    """

    region_id: str
    start: int
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", vals)
        if vals.ndim != 1 or vals.size == 0:
            raise ValidationError(f"region {self.region_id}: empty series")
        if not np.all(np.isfinite(vals)) or np.any(vals < 0):
            raise ValidationError(
                f"region {self.region_id}: precipitation must be finite and >= 0"
            )

    def __len__(self) -> int:
        return len(self.values)

    @property
    def months(self) -> np.ndarray:
        """Flat month indices aligned with ``values``."""
        return self.start + np.arange(len(self.values))


@dataclass(frozen=True)
class ImpactRecord:
    """Count of impact reports for one (region, month, category)."""

    region_id: str
    month: int
    category: str
    count: int


@dataclass(frozen=True)
class RegionAttributes:
    """Categorical attributes assigned to one region."""

    region_id: str
    lc: str
    phr: str
    rwpd: str
    taesd: str


def _read_rows(path, expected_header: Sequence[str]):
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: empty file, expected header "
                                  f"{','.join(expected_header)}") from None
        if tuple(header) != tuple(expected_header):
            raise ValidationError(
                f"{path}: header mismatch: expected "
                f"{','.join(expected_header)!r}, found {','.join(header)!r}"
            )
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(expected_header):
                raise ValidationError(
                    f"{path}: row {line_no}: expected {len(expected_header)} "
                    f"columns, found {len(row)}"
                )
            yield line_no, row


def load_precip(path) -> list[MonthlySeries]:
    """Load ``precip.csv`` into one gap-free series per region.

    Rows may arrive in any order; they are sorted by date per region.
    Gaps, duplicates, and negative or non-numeric depths are rejected
    with the offending region, month, or row named.
    """
    by_region: dict[str, dict[int, float]] = {}
    for line_no, (region_id, month_text, depth_text) in _read_rows(path, PRECIP_HEADER):
        month = parse_month(month_text)
        try:
            depth = float(depth_text)
        except ValueError:
            raise ValidationError(
                f"{path}: row {line_no}: precip_mm {depth_text!r} is not a number"
            ) from None
        if not np.isfinite(depth) or depth < 0:
            raise ValidationError(
                f"{path}: row {line_no}: precip_mm must be finite and >= 0, "
                f"found {depth_text}"
            )
        months = by_region.setdefault(region_id, {})
        if month in months:
            raise ValidationError(
                f"{path}: row {line_no}: duplicate entry for region "
                f"{region_id} month {format_month(month)}"
            )
        months[month] = depth

    series = []
    for region_id in sorted(by_region):
        months = by_region[region_id]
        start, stop = min(months), max(months)
        missing = [m for m in range(start, stop + 1) if m not in months]
        if missing:
            raise ValidationError(
                f"{path}: region {region_id}: missing month "
                f"{format_month(missing[0])} (record must be gap-free)"
            )
        values = np.array([months[m] for m in range(start, stop + 1)])
        series.append(MonthlySeries(region_id=region_id, start=start, values=values))
    return series


def load_impacts(path) -> list[ImpactRecord]:
    """Load ``impacts.csv``; unknown categories and malformed rows are rejected."""
    records = []
    for line_no, (region_id, month_text, category, count_text) in _read_rows(
        path, IMPACTS_HEADER
    ):
        month = parse_month(month_text)
        if category not in CATEGORIES:
            raise ValidationError(
                f"{path}: row {line_no}: unknown category {category!r}; "
                f"valid categories are: {', '.join(CATEGORIES)}"
            )
        try:
            count = int(count_text)
        except ValueError:
            raise ValidationError(
                f"{path}: row {line_no}: count {count_text!r} is not an integer"
            ) from None
        if count < 0:
            raise ValidationError(
                f"{path}: row {line_no}: count must be >= 0, found {count}"
            )
        records.append(ImpactRecord(region_id, month, category, count))
    return records


def load_regions(path, require_regions: Iterable[str] | None = None) -> dict[str, RegionAttributes]:
    """Load ``regions.csv`` into a region_id -> attributes map.

    When ``require_regions`` is given (the regions referenced by the
    precipitation and impact tables), every one of them must appear
    exactly once; extra or missing regions are a cross-reference error.
    """
    out: dict[str, RegionAttributes] = {}
    for line_no, (region_id, lc, phr, rwpd, taesd) in _read_rows(path, REGIONS_HEADER):
        if region_id in out:
            raise ValidationError(
                f"{path}: row {line_no}: duplicate region {region_id}"
            )
        out[region_id] = RegionAttributes(region_id, lc, phr, rwpd, taesd)
    if require_regions is not None:
        missing = sorted(set(require_regions) - set(out))
        if missing:
            raise ValidationError(
                f"{path}: regions referenced elsewhere but absent here: "
                f"{', '.join(missing)}"
            )
    return out


def write_precip(path, series: Iterable[MonthlySeries]) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PRECIP_HEADER)
        for s in sorted(series, key=lambda s: s.region_id):
            for i, depth in enumerate(s.values):
                writer.writerow([s.region_id, format_month(s.start + i), repr(float(depth))])


def write_impacts(path, records: Iterable[ImpactRecord]) -> None:
    ordered = sorted(records, key=lambda r: (r.region_id, r.month, r.category))
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(IMPACTS_HEADER)
        for r in ordered:
            writer.writerow([r.region_id, format_month(r.month), r.category, r.count])


def write_regions(path, regions: dict[str, RegionAttributes]) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(REGIONS_HEADER)
        for region_id in sorted(regions):
            a = regions[region_id]
            writer.writerow([a.region_id, a.lc, a.phr, a.rwpd, a.taesd])
