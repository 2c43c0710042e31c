"""End-to-end pipeline on the bundled synthetic dataset.

Generates the planted-signal fixture (precipitation, impact reports,
region attributes, config), runs every stage, and prints the report.
Equivalent CLI session:

    droughtimpact fixtures --out demo_data
    droughtimpact run-all --config demo_data/config.json

Artifacts land in demo_data/out: the SPI table, design matrix, per
category models, CV reports, the Table-1-style metrics table, SHAP
summaries and scatter CSVs, and SVG plots.
"""

import tempfile
from pathlib import Path

from droughtimpact import fixtures, pipeline
from droughtimpact.config import load_config

with tempfile.TemporaryDirectory() as scratch:
    paths = fixtures.generate(scratch)
    print("fixture written:")
    for name, path in sorted(paths.items()):
        print(f"  {name}: {path}")

    cfg = load_config(paths["config"])
    print("\nrunning: spi -> prepare -> train -> evaluate -> explain -> report\n")
    text = pipeline.run_all(cfg)
    print(text)

    out = Path(cfg.output_dir)
    artifacts = sorted(p.relative_to(out).as_posix() for p in out.rglob("*") if p.is_file())
    print(f"{len(artifacts)} artifacts under {out.name}/, e.g.:")
    for p in artifacts[:8]:
        print(f"  {p}")
