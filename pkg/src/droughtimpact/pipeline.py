"""Batch pipeline stages: spi, prepare, train, evaluate, explain, report.

Each stage reads only its declared inputs and writes only under the
output directory, exchanging plain tabular files so stages can be run
separately, inspected, or re-implemented elsewhere. All floating-point
cells are written with shortest round-trip decimals, so reloading an
artifact reproduces the in-memory values bit-exactly and identical runs
produce byte-identical files.

Per-category randomness (split, fold plan, resampling) is derived from
the root seed with numpy SeedSequence, so one config seed determines
the entire run.
"""

from __future__ import annotations

import csv
import json
import logging
from pathlib import Path

import numpy as np

from . import boost, evaluation, explain, features, ingest, resample, spi, svgplot
from .config import PipelineConfig
from .errors import DroughtImpactError, ValidationError
from .months import format_month, parse_month

logger = logging.getLogger(__name__)

_SEED_SPLIT = 1
_SEED_FOLDS = 2
_SEED_RESAMPLE = 3
_SEED_FINAL = 4

METRICS_TABLE_HEADER = ("category", "ratio_of_impacts", "accuracy", "recall", "f2_score")


def _derive_seed(root: int, tag: int, index: int) -> int:
    return int(np.random.SeedSequence([root, tag, index]).generate_state(1)[0])


def _fmt(x: float) -> str:
    return repr(float(x))


def _write_csv(path, header, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _read_csv(path, expected_header=None):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"missing pipeline artifact {path}")
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if expected_header is not None and tuple(header) != tuple(expected_header):
            raise ValidationError(
                f"{path}: unexpected header {header!r}, expected {list(expected_header)!r}"
            )
        return header, list(reader)


# ---------------------------------------------------------------------------
# stage: spi


def run_spi(cfg: PipelineConfig) -> Path:
    """Compute SPI for every region and write ``spi.csv``.

    One row per (region, month) of the full record; undefined (warm-up)
    cells are empty and flagged by the ``warmup`` column.
    """
    series = ingest.load_precip(cfg.precip_path)
    windows = tuple(sorted(cfg.spi_windows))
    header = ["region_id", "month"] + [f"spi{w}" for w in windows] + ["warmup"]
    rows = []
    for s in series:
        by_window = spi.compute_spi(s, windows)
        for i in range(len(s)):
            cells = [s.region_id, format_month(s.start + i)]
            any_undefined = False
            for w in windows:
                v = by_window[w].values[i]
                if np.isnan(v):
                    cells.append("")
                    any_undefined = True
                else:
                    cells.append(_fmt(v))
            cells.append("1" if any_undefined else "0")
            rows.append(cells)
    out = Path(cfg.output_dir) / "spi.csv"
    _write_csv(out, header, rows)
    logger.info("spi: wrote %d rows for %d regions to %s", len(rows), len(series), out)
    return out


def _load_spi_table(cfg: PipelineConfig) -> dict[str, dict[int, spi.SpiSeries]]:
    windows = tuple(sorted(cfg.spi_windows))
    header = ["region_id", "month"] + [f"spi{w}" for w in windows] + ["warmup"]
    _, rows = _read_csv(Path(cfg.output_dir) / "spi.csv", header)
    per_region: dict[str, list] = {}
    for row in rows:
        per_region.setdefault(row[0], []).append(row)
    out = {}
    for region_id, region_rows in per_region.items():
        months = [parse_month(r[1]) for r in region_rows]
        order = np.argsort(months)
        start = months[order[0]]
        if sorted(months) != list(range(start, start + len(months))):
            raise ValidationError(
                f"spi.csv: region {region_id} months are not gap-free"
            )
        values = {w: np.full(len(region_rows), np.nan) for w in windows}
        for pos, oi in enumerate(order):
            row = region_rows[oi]
            for wi, w in enumerate(windows):
                cell = row[2 + wi]
                if cell != "":
                    values[w][pos] = float(cell)
        out[region_id] = {
            w: spi.SpiSeries(region_id=region_id, window=w, start=start, values=values[w])
            for w in windows
        }
    return out


# ---------------------------------------------------------------------------
# stage: prepare


def run_prepare(cfg: PipelineConfig) -> None:
    """Assemble the design matrix, labels, category set, and splits."""
    out = Path(cfg.output_dir)
    spi_by_region = _load_spi_table(cfg)
    records = ingest.load_impacts(cfg.impacts_path)
    referenced = set(spi_by_region) | {r.region_id for r in records}
    regions = ingest.load_regions(cfg.regions_path, require_regions=referenced)

    matrix = features.build_design_matrix(
        spi_by_region, regions, cfg.study_start, cfg.study_end
    )
    labels = features.summarize_impacts(records, matrix)
    retained = features.prune_categories(labels, cfg.prune_threshold)

    _write_csv(
        out / "matrix.csv",
        ["region_id", "month", *matrix.column_names],
        (
            [matrix.row_regions[i], format_month(int(matrix.row_months[i]))]
            + [_fmt(v) for v in matrix.values[i]]
            for i in range(matrix.n_rows)
        ),
    )
    _write_csv(
        out / "labels.csv",
        ["region_id", "month", *ingest.CATEGORIES],
        (
            [matrix.row_regions[i], format_month(int(matrix.row_months[i]))]
            + [str(int(labels[c].values[i])) for c in ingest.CATEGORIES]
            for i in range(matrix.n_rows)
        ),
    )
    (out / "schema.json").write_text(
        json.dumps(matrix.schema.to_dict(), indent=2) + "\n", encoding="utf-8"
    )

    categories = {
        "retained": sorted(retained),
        "dropped": sorted(set(labels) - set(retained)),
        "positive_fraction": {c: labels[c].positive_fraction for c in sorted(labels)},
    }
    (out / "categories.json").write_text(
        json.dumps(categories, indent=2) + "\n", encoding="utf-8"
    )

    splits_dir = out / "splits"
    splits_dir.mkdir(parents=True, exist_ok=True)
    for category in sorted(retained):
        cat_index = ingest.CATEGORIES.index(category)
        split = features.stratified_split(
            retained[category],
            fractions=cfg.split_fractions,
            seed=_derive_seed(cfg.seed, _SEED_SPLIT, cat_index),
        )
        payload = {
            "seed": split.seed,
            "train": split.train.tolist(),
            "validation": split.validation.tolist(),
            "test": split.test.tolist(),
        }
        (splits_dir / f"{category}.json").write_text(
            json.dumps(payload) + "\n", encoding="utf-8"
        )
    logger.info(
        "prepare: %d rows, %d features, retained %s, dropped %s",
        matrix.n_rows, len(matrix.column_names),
        categories["retained"], categories["dropped"],
    )


def _load_prepared(cfg: PipelineConfig):
    out = Path(cfg.output_dir)
    schema = features.FeatureSchema.from_dict(
        json.loads((out / "schema.json").read_text(encoding="utf-8"))
    )
    header, rows = _read_csv(out / "matrix.csv",
                             ["region_id", "month", *schema.column_names])
    values = np.array([[float(c) for c in row[2:]] for row in rows])
    matrix = features.DesignMatrix(
        values=values,
        schema=schema,
        row_regions=tuple(row[0] for row in rows),
        row_months=np.array([parse_month(row[1]) for row in rows], dtype=np.int64),
    )
    _, label_rows = _read_csv(out / "labels.csv",
                              ["region_id", "month", *ingest.CATEGORIES])
    labels = {}
    for ci, category in enumerate(ingest.CATEGORIES):
        labels[category] = features.LabelVector(
            category=category,
            values=np.array([int(r[2 + ci]) for r in label_rows], dtype=np.int8),
        )
    categories = json.loads((out / "categories.json").read_text(encoding="utf-8"))
    return matrix, labels, categories


def _load_split(cfg: PipelineConfig, category: str) -> features.SplitSet:
    path = Path(cfg.output_dir) / "splits" / f"{category}.json"
    if not path.exists():
        raise FileNotFoundError(f"missing split file {path}; run prepare first")
    d = json.loads(path.read_text(encoding="utf-8"))
    return features.SplitSet(
        train=np.asarray(d["train"], dtype=np.int64),
        validation=np.asarray(d["validation"], dtype=np.int64),
        test=np.asarray(d["test"], dtype=np.int64),
        seed=int(d["seed"]),
    )


def _select_categories(categories: dict, category: str | None) -> list[str]:
    retained = list(categories["retained"])
    if category is None:
        return retained
    if category not in retained:
        raise ValidationError(
            f"category {category!r} is not retained; retained: {retained}"
        )
    return [category]


# ---------------------------------------------------------------------------
# stage: train


def run_train(cfg: PipelineConfig, category: str | None = None) -> None:
    """Grid search on the training split, fit final models, score validation.

    Hyperparameters are selected by stratified k-fold cross validation
    on the training split (fold-train parts resampled per plan when the
    trigger fires); the final model is refit on the full balanced
    training split and scored once on the untouched validation split as
    a stability report.
    """
    out = Path(cfg.output_dir)
    matrix, labels, categories = _load_prepared(cfg)
    validation_rows = []
    for cat in _select_categories(categories, category):
        cat_index = ingest.CATEGORIES.index(cat)
        split = _load_split(cfg, cat)
        y = labels[cat].values.astype(np.int64)
        X_train, y_train = matrix.values[split.train], y[split.train]

        fold_plan = evaluation.stratified_kfold(
            y_train, k=cfg.cv_folds,
            seed=_derive_seed(cfg.seed, _SEED_FOLDS, cat_index),
        )
        plan = cfg.resample_plan.replaced(
            seed=_derive_seed(cfg.resample_plan.seed, _SEED_RESAMPLE, cat_index)
        )
        n_pos = int(y_train.sum())
        grid = cfg.expand_grid(n_pos, len(y_train) - n_pos)
        result = evaluation.grid_search(
            X_train, y_train, grid, fold_plan, plan, matrix.schema, cfg.threshold
        )

        bx, by = resample.balance(
            X_train, y_train,
            plan.replaced(seed=_derive_seed(plan.seed, _SEED_FINAL, cat_index)),
            matrix.schema,
        )
        model = boost.train(bx, by.astype(np.float64), result.best_config)
        (out / "models").mkdir(parents=True, exist_ok=True)
        model.save(out / "models" / f"{cat}.txt")

        cfgs = list(grid)
        _write_csv(
            out / "cv" / f"{cat}.csv",
            ["grid_index", "max_depth", "gamma", "lambda", "scale_pos_weight",
             "fold", "f2", "pr_auc"],
            (
                [fm.grid_index, cfgs[fm.grid_index].max_depth,
                 _fmt(cfgs[fm.grid_index].gamma), _fmt(cfgs[fm.grid_index].lam),
                 _fmt(cfgs[fm.grid_index].scale_pos_weight),
                 fm.fold, _fmt(fm.f2), _fmt(fm.pr_auc)]
                for fm in result.fold_metrics
            ),
        )
        best = result.best_config
        (out / "best").mkdir(parents=True, exist_ok=True)
        (out / "best" / f"{cat}.json").write_text(
            json.dumps({
                "grid_index": result.best_index,
                "mean_f2": result.mean_f2[result.best_index],
                "mean_pr_auc": result.mean_pr_auc[result.best_index],
                "config": {
                    "eta": best.eta, "n_rounds": best.n_rounds,
                    "max_depth": best.max_depth, "gamma": best.gamma,
                    "lambda": best.lam, "scale_pos_weight": best.scale_pos_weight,
                    "base_score": best.base_score,
                    "min_child_weight": best.min_child_weight,
                },
            }, indent=2) + "\n",
            encoding="utf-8",
        )

        report = evaluation.evaluate(
            model, matrix.values[split.validation], y[split.validation],
            cfg.threshold, category=cat,
        )
        validation_rows.append([
            cat, _fmt(report.accuracy), _fmt(report.recall),
            _fmt(report.precision), _fmt(report.f2), _fmt(report.pr_auc),
        ])
        logger.info(
            "train: %s best grid point %d (mean F2 %.3f), validation F2 %.3f",
            cat, result.best_index, result.mean_f2[result.best_index], report.f2,
        )
    if category is None:
        _write_csv(
            out / "validation.csv",
            ["category", "accuracy", "recall", "precision", "f2", "pr_auc"],
            validation_rows,
        )


# ---------------------------------------------------------------------------
# stage: evaluate


def run_evaluate(cfg: PipelineConfig, category: str | None = None) -> None:
    """Score final models on their held-out test splits."""
    out = Path(cfg.output_dir)
    matrix, labels, categories = _load_prepared(cfg)
    table_rows = []
    full_rows = []
    for cat in _select_categories(categories, category):
        model = boost.load(out / "models" / f"{cat}.txt")
        split = _load_split(cfg, cat)
        y = labels[cat].values.astype(np.int64)
        report = evaluation.evaluate(
            model, matrix.values[split.test], y[split.test], cfg.threshold, category=cat
        )
        ratio = float(labels[cat].positive_fraction)
        table_rows.append([
            cat, _fmt(ratio), _fmt(report.accuracy),
            _fmt(report.recall), _fmt(report.f2),
        ])
        full_rows.append([
            cat, _fmt(ratio), _fmt(report.accuracy), _fmt(report.recall),
            _fmt(report.precision), _fmt(report.f2), _fmt(report.pr_auc),
            _fmt(report.threshold), str(len(split.test)), str(matrix.n_rows),
        ])
        logger.info("evaluate: %s recall %.3f f2 %.3f", cat, report.recall, report.f2)
    suffix = "" if category is None else f"_{category}"
    _write_csv(out / f"metrics_table{suffix}.csv", METRICS_TABLE_HEADER, table_rows)
    _write_csv(
        out / f"metrics_full{suffix}.csv",
        ["category", "ratio_of_impacts", "accuracy", "recall", "precision",
         "f2_score", "pr_auc", "threshold", "n_test", "n_rows"],
        full_rows,
    )


# ---------------------------------------------------------------------------
# stage: explain


def run_explain(cfg: PipelineConfig, category: str | None = None) -> None:
    """TreeSHAP artifacts per category: summary, SPI scatters, main effects.

    Attributions are computed on the test split. The two SPI features
    with the largest mean |attribution| get main-effect series and SVG
    plots; one-hot columns stay in the ranking but are excluded from
    scatter output.
    """
    out = Path(cfg.output_dir)
    matrix, labels, categories = _load_prepared(cfg)
    for cat in _select_categories(categories, category):
        model = boost.load(out / "models" / f"{cat}.txt")
        split = _load_split(cfg, cat)
        rows = matrix.values[split.test]
        sub = features.DesignMatrix(
            values=rows,
            schema=matrix.schema,
            row_regions=tuple(matrix.row_regions[i] for i in split.test),
            row_months=matrix.row_months[split.test],
        )
        shap = explain.shap_values(model, rows)
        ranking, scatter = explain.summarize(shap, sub)

        cat_dir = out / "explain" / cat
        _write_csv(
            cat_dir / "shap_summary.csv",
            ["feature", "mean_abs_shap", "rank"],
            (
                [matrix.column_names[j], _fmt(ranking.mean_abs[j]),
                 str(int(np.flatnonzero(ranking.order == j)[0]) + 1)]
                for j in range(len(matrix.column_names))
            ),
        )
        for name, (xv, phi) in scatter.items():
            _write_csv(
                cat_dir / f"shap_scatter_{name}.csv",
                ["feature_value", "shap_value"],
                ([_fmt(a), _fmt(b)] for a, b in zip(xv, phi)),
            )

        spi_cols = list(matrix.schema.numeric_columns)
        spi_order = [j for j in ranking.order if j in spi_cols]
        top = spi_order[:2]
        plots = out / "plots"
        plots.mkdir(parents=True, exist_ok=True)
        for j in top:
            name = matrix.column_names[j]
            xv, phi = scatter[name]
            svgplot.write_scatter_svg(
                plots / f"{cat}_shap_scatter_{name}.svg", xv, phi,
                f"{cat}: attribution vs {name}", name, "attribution (log-odds)",
            )
            effect = explain.main_effects(model, rows, j)
            _write_csv(
                cat_dir / f"main_effect_{name}.csv",
                ["feature_value", "main_effect"],
                ([_fmt(a), _fmt(b)] for a, b in
                 zip(effect.feature_values, effect.effects)),
            )
            svgplot.write_scatter_svg(
                plots / f"{cat}_main_effect_{name}.svg",
                effect.feature_values, effect.effects,
                f"{cat}: main effect of {name}", name, "main effect (log-odds)",
            )
        logger.info(
            "explain: %s top features %s",
            cat, [matrix.column_names[j] for j in ranking.order[:3]],
        )


# ---------------------------------------------------------------------------
# stage: report


def run_report(output_dir) -> str:
    """Render the metrics table and per-category feature rankings as text."""
    out = Path(output_dir)
    table_path = out / "metrics_table.csv"
    if not table_path.exists():
        raise FileNotFoundError(
            f"missing {table_path}; expected artifacts of a prior run "
            f"(metrics_table.csv, explain/<category>/shap_summary.csv)"
        )
    _, rows = _read_csv(table_path, METRICS_TABLE_HEADER)

    header = ("Category", "Ratio of Impacts", "Accuracy", "Recall", "F2 Score")
    rendered = [
        (r[0], f"{float(r[1]):.2f}", f"{float(r[2]):.2f}",
         f"{float(r[3]):.2f}", f"{float(r[4]):.2f}")
        for r in rows
    ]
    widths = [max(len(header[i]), *(len(r[i]) for r in rendered)) if rendered
              else len(header[i]) for i in range(5)]
    lines = []
    lines.append("  ".join(header[i].ljust(widths[i]) for i in range(5)).rstrip())
    lines.append("  ".join("-" * widths[i] for i in range(5)))
    for r in rendered:
        lines.append("  ".join(r[i].ljust(widths[i]) for i in range(5)).rstrip())

    for r in rows:
        cat = r[0]
        summary = out / "explain" / cat / "shap_summary.csv"
        if summary.exists():
            _, srows = _read_csv(summary)
            srows.sort(key=lambda s: int(s[2]))
            top = ", ".join(f"{s[0]} ({float(s[1]):.3f})" for s in srows[:5])
            lines.append("")
            lines.append(f"{cat}: top features by mean |attribution|: {top}")
    text = "\n".join(lines) + "\n"
    (out / "report.txt").write_text(text, encoding="utf-8")
    return text


# ---------------------------------------------------------------------------
# run-all


def run_all(cfg: PipelineConfig, category: str | None = None) -> str:
    """Run every stage in order; any failure aborts naming the stage."""
    stages = [
        ("spi", lambda: run_spi(cfg)),
        ("prepare", lambda: run_prepare(cfg)),
        ("train", lambda: run_train(cfg, category)),
        ("evaluate", lambda: run_evaluate(cfg, category)),
        ("explain", lambda: run_explain(cfg, category)),
    ]
    for name, fn in stages:
        try:
            fn()
        except DroughtImpactError as e:
            raise type(e)(f"stage {name} failed: {e}") from e
        except OSError as e:
            raise OSError(f"stage {name} failed: {e}") from e
    if category is None:
        return run_report(cfg.output_dir)
    return ""
