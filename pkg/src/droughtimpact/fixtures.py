"""Planted-signal synthetic dataset for demos and acceptance runs.

Precipitation is drawn from seasonal gamma distributions per region
(with occasional dry-summer zeros), SPI is computed with the library
itself, and impact presence is then sampled from logistic models of
spi6 and spi12, so the learnable signal is known by construction:

* six categories carry real signal at positive rates from ~11% (fire,
  the imbalanced one) to ~55% (agriculture);
* ``society_public_health`` is driven by spi12 alone, so attribution
  ranking has a known right answer;
* three categories sit below the 5% pruning threshold on purpose.

Intercepts are calibrated by bisection against the realized SPI values,
so target rates land within sampling noise regardless of the seed.
Output: ``precip.csv``, ``impacts.csv``, ``regions.csv``, and a
``config.json`` wired to them with a small grid sized for quick runs.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from scipy.special import expit

from . import ingest, spi
from .months import parse_month

DEFAULT_SEED = 20110101

N_REGIONS = 88
RECORD_START = "1981-01"
RECORD_MONTHS = 420
STUDY_START = "2011-01"
STUDY_END = "2015-09"

#: category -> (target positive rate, spi6 slope, spi12 slope)
SIGNALS = {
    "agriculture": (0.55, -1.6, -2.4),
    "plants_wildlife": (0.30, -2.0, -1.0),
    "society_public_health": (0.50, 0.0, -2.6),
    "water_supply_quality": (0.36, -1.2, -1.6),
    "fire": (0.11, -1.5, -3.5),
    "relief_response_restrictions": (0.36, -2.2, -0.8),
    # below the 5% pruning threshold by construction
    "energy": (0.03, -0.8, -0.8),
    "business_industry": (0.04, -0.6, -0.9),
    "tourism_recreation": (0.02, -0.9, -0.5),
}

_LC = ("cropland", "forest", "grassland", "shrubland")
_PHR = ("phr01", "phr02", "phr03")
_RWPD = ("rwpd_a", "rwpd_b", "rwpd_c")
_TAESD = ("d01", "d02", "d03", "d04")


def _intercept_for_rate(rng_free_logits: np.ndarray, target: float) -> float:
    """Bisect the intercept so mean sigmoid(b0 + logits) hits the target."""
    lo, hi = -20.0, 20.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if float(np.mean(expit(mid + rng_free_logits))) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def generate(out_dir, seed: int = DEFAULT_SEED) -> dict:
    """Write the fixture files into ``out_dir`` and return their paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    start = parse_month(RECORD_START)

    regions = {}
    series = []
    for i in range(N_REGIONS):
        region_id = f"R{i + 1:03d}"
        regions[region_id] = ingest.RegionAttributes(
            region_id=region_id,
            lc=_LC[rng.integers(0, len(_LC))],
            phr=_PHR[rng.integers(0, len(_PHR))],
            rwpd=_RWPD[rng.integers(0, len(_RWPD))],
            taesd=_TAESD[rng.integers(0, len(_TAESD))],
        )
        months = np.arange(RECORD_MONTHS)
        cal = months % 12  # 0 = January
        # wetter springs/autumns, drier winters; region-specific scale
        shape = 1.7 + 0.9 * np.sin(2.0 * np.pi * (cal - 2) / 12.0)
        scale = float(rng.uniform(24.0, 44.0))
        values = rng.gamma(shape, scale)
        if i % 4 == 0:
            # a quarter of the regions see genuinely dry summers
            summer = (cal == 6) | (cal == 7)
            values[summer & (rng.random(RECORD_MONTHS) < 0.25)] = 0.0
        values = np.round(values, 2)
        series.append(ingest.MonthlySeries(region_id=region_id, start=start, values=values))

    study_start = parse_month(STUDY_START)
    study_end = parse_month(STUDY_END)
    row_keys = []
    s6_rows = []
    s12_rows = []
    for s in series:
        computed = spi.compute_spi(s, (6, 12))
        for month in range(study_start, study_end + 1):
            offset = month - s.start
            s6_rows.append(computed[6].values[offset])
            s12_rows.append(computed[12].values[offset])
            row_keys.append((s.region_id, month))
    s6 = np.asarray(s6_rows)
    s12 = np.asarray(s12_rows)

    records = []
    for category in ingest.CATEGORIES:
        target, b6, b12 = SIGNALS[category]
        logits = b6 * s6 + b12 * s12
        b0 = _intercept_for_rate(logits, target)
        p = expit(b0 + logits)
        present = rng.random(len(p)) < p
        counts = np.where(present, 1 + rng.poisson(0.8, size=len(p)), 0)
        for (region_id, month), count in zip(row_keys, counts):
            if count > 0:
                records.append(ingest.ImpactRecord(region_id, month, category, int(count)))

    paths = {
        "precip": out_dir / "precip.csv",
        "impacts": out_dir / "impacts.csv",
        "regions": out_dir / "regions.csv",
        "config": out_dir / "config.json",
    }
    ingest.write_precip(paths["precip"], series)
    ingest.write_impacts(paths["impacts"], records)
    ingest.write_regions(paths["regions"], regions)

    config = {
        "inputs": {
            "precip": "precip.csv",
            "impacts": "impacts.csv",
            "regions": "regions.csv",
        },
        "output_dir": "out",
        "study_window": {"start": STUDY_START, "end": STUDY_END},
        "spi_windows": [1, 3, 6, 9, 12],
        "split_fractions": [0.6, 0.2, 0.2],
        "seed": seed,
        "prune_threshold": 0.05,
        "threshold": 0.5,
        "cv_folds": 10,
        "resample": {
            "trigger_threshold": 0.2,
            "smote_k": 5,
            "oversample_ratio": 0.5,
            "undersample_ratio": 1.0,
        },
        # sized for a quick single-threaded end-to-end run; widen for studies.
        # scale_pos_weight stays modest here so toggling the resampling
        # trigger compares against the same cost weighting, not against
        # full auto-reweighting
        "train": {"eta": 0.3, "n_rounds": 20, "base_score": 0.5, "min_child_weight": 1.0},
        "grid": {
            "max_depth": [3, 4],
            "gamma": [0.0],
            "lambda": [1.0],
            "scale_pos_weight": [1, 2],
        },
    }
    paths["config"].write_text(json.dumps(config, indent=2) + "\n", encoding="utf-8")
    return {k: str(v) for k, v in paths.items()}
