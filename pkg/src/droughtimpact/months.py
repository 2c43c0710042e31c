"""Calendar-month arithmetic on a flat integer index.

A month is represented internally as ``year * 12 + (month - 1)`` so that
consecutive months differ by exactly 1 and gaps are plain integer
arithmetic. The textual form is always ``YYYY-MM``.
"""

from __future__ import annotations

import re

from .errors import ValidationError

_MONTH_RE = re.compile(r"^(\d{4})-(\d{2})$")

#: Meteorological seasons in fixed column order.
SEASONS = ("DJF", "MAM", "JJA", "SON")

_SEASON_OF_MONTH = {
    12: "DJF", 1: "DJF", 2: "DJF",
    3: "MAM", 4: "MAM", 5: "MAM",
    6: "JJA", 7: "JJA", 8: "JJA",
    9: "SON", 10: "SON", 11: "SON",
}


def parse_month(text: str) -> int:
    """Parse ``YYYY-MM`` into a flat month index."""
    m = _MONTH_RE.match(text.strip())
    if not m:
        raise ValidationError(f"malformed month {text!r}: expected YYYY-MM")
    year, month = int(m.group(1)), int(m.group(2))
    if not 1 <= month <= 12:
        raise ValidationError(f"malformed month {text!r}: month must be 01-12")
    return year * 12 + (month - 1)


def format_month(index: int) -> str:
    """Render a flat month index as ``YYYY-MM``."""
    year, month = divmod(index, 12)
    return f"{year:04d}-{month + 1:02d}"


def calendar_month(index: int) -> int:
    """Calendar month 1-12 of a flat month index."""
    return index % 12 + 1


def season_of(month: int) -> str:
    """Meteorological season (DJF/MAM/JJA/SON) of a calendar month 1-12."""
    return _SEASON_OF_MONTH[month]
