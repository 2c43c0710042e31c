"""Command-line interface for the batch pipeline.

Subcommands mirror the pipeline stages (``spi``, ``prepare``, ``train``,
``evaluate``, ``explain``, ``report``, ``run-all``) plus ``fixtures``,
which writes the bundled planted-signal synthetic dataset.

Exit codes: 0 success, 1 validation failure, 2 I/O failure, 3 numerical
failure (distribution fitting or training).
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import fixtures, pipeline
from .config import load_config
from .errors import FitError, ValidationError

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2
EXIT_NUMERICAL = 3

_STAGES = {
    "spi": lambda cfg, args: pipeline.run_spi(cfg),
    "prepare": lambda cfg, args: pipeline.run_prepare(cfg),
    "train": lambda cfg, args: pipeline.run_train(cfg, args.category),
    "evaluate": lambda cfg, args: pipeline.run_evaluate(cfg, args.category),
    "explain": lambda cfg, args: pipeline.run_explain(cfg, args.category),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="droughtimpact",
        description="SPI-driven multi-category drought impact modeling pipeline",
    )
    parser.add_argument("-q", "--quiet", action="store_true",
                        help="suppress progress logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_stage(name, help_text, category=True):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to the JSON config file")
        p.add_argument("--out", default=None, help="override the output directory")
        p.add_argument("--seed", type=int, default=None, help="override the root seed")
        if category:
            p.add_argument("--category", default=None,
                           help="restrict to one impact category")
        return p

    add_stage("spi", "compute the SPI table from the precipitation file",
              category=False)
    add_stage("prepare", "assemble design matrix, labels, and splits",
              category=False)
    add_stage("train", "grid-search and fit one model per retained category")
    add_stage("evaluate", "score final models on the held-out test split")
    add_stage("explain", "write TreeSHAP summaries, scatter data, and SVG plots")
    add_stage("run-all", "run every stage in order and render the report")

    p = sub.add_parser("report", help="render the metrics table of a prior run")
    p.add_argument("--out", required=True, help="output directory of the prior run")

    p = sub.add_parser("fixtures", help="write the synthetic planted-signal dataset")
    p.add_argument("--out", required=True, help="directory for the fixture files")
    p.add_argument("--seed", type=int, default=fixtures.DEFAULT_SEED)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "fixtures":
            paths = fixtures.generate(args.out, seed=args.seed)
            print("\n".join(f"{k}: {v}" for k, v in sorted(paths.items())))
            return EXIT_OK
        if args.command == "report":
            sys.stdout.write(pipeline.run_report(args.out))
            return EXIT_OK

        cfg = load_config(args.config).with_overrides(
            output_dir=args.out, seed=args.seed
        )
        if args.command == "run-all":
            text = pipeline.run_all(cfg, args.category)
            sys.stdout.write(text)
        else:
            _STAGES[args.command](cfg, args)
        return EXIT_OK
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except FitError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
