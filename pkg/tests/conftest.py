"""Shared fixtures: the synthetic dataset and the pipeline runs it feeds.

The session-scoped ``fixture_run`` executes the full pipeline three
times (normal, identical rerun, and a no-resampling run restricted to
the imbalanced category) because several acceptance criteria share
those artifacts. JIT kernels are warmed before the timed run so the
measured runtime is the algorithm, not compilation.
"""

from __future__ import annotations

import json
import logging
import time
from pathlib import Path

import numpy as np
import pytest

from droughtimpact import boost, explain, fixtures, pipeline
from droughtimpact.config import load_config

logging.getLogger("droughtimpact").setLevel(logging.WARNING)


def warm_kernels() -> None:
    """Compile (or load from cache) the numba kernels on a toy problem."""
    rng = np.random.default_rng(0)
    X = rng.normal(size=(40, 3))
    y = (X[:, 0] > 0).astype(float)
    model = boost.train(X, y, boost.TrainConfig(n_rounds=2, max_depth=2))
    explain.shap_values(model, X[:4])
    explain.interaction_values_for(model, X[:4], 0)


@pytest.fixture(scope="session")
def warmed():
    warm_kernels()
    return True


@pytest.fixture(scope="session")
def fixture_run(tmp_path_factory, warmed):
    """Generate the planted-signal dataset and run the pipeline on it."""
    root = tmp_path_factory.mktemp("fixture")
    paths = fixtures.generate(root)
    cfg = load_config(paths["config"])

    t0 = time.monotonic()
    pipeline.run_all(cfg)
    elapsed = time.monotonic() - t0

    rerun_cfg = cfg.with_overrides(output_dir=root / "out_rerun")
    pipeline.run_all(rerun_cfg)

    # same config with the resampling trigger disabled, imbalanced category only
    raw = json.loads(Path(paths["config"]).read_text(encoding="utf-8"))
    raw["resample"]["trigger_threshold"] = 0.0
    raw["output_dir"] = "out_nores"
    nores_path = root / "config_nores.json"
    nores_path.write_text(json.dumps(raw, indent=2), encoding="utf-8")
    pipeline.run_all(load_config(nores_path), category="fire")

    return {
        "root": root,
        "paths": paths,
        "config": cfg,
        "out": Path(cfg.output_dir),
        "out_rerun": Path(rerun_cfg.output_dir),
        "out_nores": root / "out_nores",
        "elapsed": elapsed,
    }


def read_metrics_table(path) -> dict[str, dict[str, float]]:
    import csv

    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out[row["category"]] = {k: float(v) for k, v in row.items() if k != "category"}
    return out
