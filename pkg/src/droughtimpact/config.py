"""Pipeline configuration: a JSON file with documented keys.

Every stochastic stage (splits, SMOTE, undersampling, fold assignment)
derives its randomness from the single root ``seed``, so one config
fully determines one pipeline result. Command-line flags can override
the output directory, the seed, and the category restriction.

Keys and defaults::

    {
      "inputs": {"precip": "...", "impacts": "...", "regions": "..."},
      "output_dir": "out",
      "study_window": {"start": "YYYY-MM", "end": "YYYY-MM"},
      "spi_windows": [1, 3, 6, 9, 12],
      "split_fractions": [0.6, 0.2, 0.2],
      "seed": 0,
      "prune_threshold": 0.05,
      "threshold": 0.5,
      "cv_folds": 10,
      "resample": {"trigger_threshold": 0.2, "smote_k": 5,
                    "oversample_ratio": 0.5, "undersample_ratio": 1.0},
      "train": {"eta": 0.3, "n_rounds": 50, "base_score": 0.5,
                 "min_child_weight": 1.0},
      "grid": {"max_depth": [3, 5, 7], "gamma": [0, 1, 5],
                "lambda": [1, 10], "scale_pos_weight": [1, "auto"]}
    }

``"auto"`` in ``scale_pos_weight`` expands to the negative/positive
ratio of the category's training labels.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .boost import TrainConfig
from .errors import ValidationError
from .months import parse_month
from .resample import ResamplePlan
from .spi import WINDOWS

DEFAULT_GRID_AXES = {
    "max_depth": [3, 5, 7],
    "gamma": [0, 1, 5],
    "lambda": [1, 10],
    "scale_pos_weight": [1, "auto"],
}


@dataclass(frozen=True)
class PipelineConfig:
    precip_path: str
    impacts_path: str
    regions_path: str
    output_dir: str
    study_start: int
    study_end: int
    spi_windows: tuple = WINDOWS
    split_fractions: tuple = (0.6, 0.2, 0.2)
    seed: int = 0
    prune_threshold: float = 0.05
    threshold: float = 0.5
    cv_folds: int = 10
    resample_plan: ResamplePlan = field(default_factory=ResamplePlan)
    train_defaults: dict = field(default_factory=dict)
    grid_axes: dict = field(default_factory=lambda: dict(DEFAULT_GRID_AXES))

    def __post_init__(self):
        if self.study_end < self.study_start:
            raise ValidationError("study window is empty")
        if not self.spi_windows:
            raise ValidationError("at least one SPI window is required")

    def with_overrides(self, output_dir=None, seed=None) -> "PipelineConfig":
        cfg = self
        if output_dir is not None:
            cfg = replace(cfg, output_dir=str(output_dir))
        if seed is not None:
            cfg = replace(cfg, seed=int(seed),
                          resample_plan=replace(cfg.resample_plan, seed=int(seed)))
        return cfg

    def expand_grid(self, n_pos: int, n_neg: int) -> list[TrainConfig]:
        """Materialize the grid in declaration order; 'auto' -> neg/pos."""
        base = TrainConfig(seed=self.seed, **self.train_defaults)
        points = []
        axes = self.grid_axes
        for depth in axes.get("max_depth", [base.max_depth]):
            for gamma in axes.get("gamma", [base.gamma]):
                for lam in axes.get("lambda", [base.lam]):
                    for spw in axes.get("scale_pos_weight", [base.scale_pos_weight]):
                        if spw == "auto":
                            spw = n_neg / n_pos if n_pos else 1.0
                        points.append(base.replaced(
                            max_depth=int(depth),
                            gamma=float(gamma),
                            lam=float(lam),
                            scale_pos_weight=float(spw),
                        ))
        return points


def load_config(path) -> PipelineConfig:
    """Parse and validate a JSON config file."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ValidationError(f"{path}: invalid JSON: {e}") from None

    known = {
        "inputs", "output_dir", "study_window", "spi_windows", "split_fractions",
        "seed", "prune_threshold", "threshold", "cv_folds", "resample", "train", "grid",
    }
    unknown = set(raw) - known
    if unknown:
        raise ValidationError(f"{path}: unknown config keys: {sorted(unknown)}")
    try:
        inputs = raw["inputs"]
        window = raw["study_window"]
        base = path.parent
        resample_kw = dict(raw.get("resample", {}))
        seed = int(raw.get("seed", 0))
        resample_kw.setdefault("seed", seed)
        # the boosting L2 parameter is "lambda" in config files, "lam" in code
        train_kw = {
            ("lam" if k == "lambda" else k): v
            for k, v in raw.get("train", {}).items()
        }
        return PipelineConfig(
            precip_path=str(base / inputs["precip"]),
            impacts_path=str(base / inputs["impacts"]),
            regions_path=str(base / inputs["regions"]),
            output_dir=str(base / raw.get("output_dir", "out")),
            study_start=parse_month(window["start"]),
            study_end=parse_month(window["end"]),
            spi_windows=tuple(raw.get("spi_windows", WINDOWS)),
            split_fractions=tuple(raw.get("split_fractions", (0.6, 0.2, 0.2))),
            seed=seed,
            prune_threshold=float(raw.get("prune_threshold", 0.05)),
            threshold=float(raw.get("threshold", 0.5)),
            cv_folds=int(raw.get("cv_folds", 10)),
            resample_plan=ResamplePlan(**resample_kw),
            train_defaults=train_kw,
            grid_axes=dict(raw.get("grid", DEFAULT_GRID_AXES)),
        )
    except KeyError as e:
        raise ValidationError(f"{path}: missing config key {e}") from None
