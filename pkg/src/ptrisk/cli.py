"""Command-line entry point.

Subcommands: ``synth`` (write a synthetic cohort), ``run`` (full
ingest/curate/evaluate/report pipeline), ``tables`` and ``plotdata``
(regenerate those outputs from an existing bundle).  All take
``--config`` (INI file; defaults apply when omitted), ``--out``
(overrides the output directory) and ``--seed`` (overrides the cohort
seed, synth only).

Exit codes: 0 success, 1 config error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import sys

from .config import load_config, with_out_dir, with_synth_seed
from .errors import ConfigError, DataError
from .report import StageFailure, regenerate_plotdata, regenerate_tables, run_experiment
from .synth import write_cohort

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ptrisk",
        description="pre-test risk stratification benchmark pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("synth", "generate a synthetic cohort file plus ground-truth sidecar"),
        ("run", "run the full evaluation grid and write the report bundle"),
        ("tables", "regenerate per-group metric tables from a bundle"),
        ("plotdata", "regenerate plot-data files from a bundle"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", default=None, help="INI config file; defaults if omitted")
        cmd.add_argument("--out", default=None, help="output directory (overrides config)")
        cmd.add_argument(
            "--seed", type=int, default=None, help="cohort seed override (synth only)"
        )
    return parser


def _classify(exc: Exception) -> int:
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, DataError):
        return EXIT_DATA
    return EXIT_INTERNAL


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        if args.out is not None:
            config = with_out_dir(config, args.out)
        if args.command == "synth":
            if args.seed is not None:
                config = with_synth_seed(config, args.seed)
            cohort_path, sidecar_path = write_cohort(config.synth, config.out_dir)
            print(f"wrote {cohort_path} and {sidecar_path}")
            return EXIT_OK
        if args.command == "run":
            bundle = run_experiment(config)
            print(f"wrote bundle with {len(bundle.reports)} metric reports to {bundle.out_dir}")
            return EXIT_OK
        if args.command == "tables":
            names = regenerate_tables(config)
            print(f"wrote {', '.join(names)}")
            return EXIT_OK
        names = regenerate_plotdata(config)
        print(f"wrote {', '.join(names)}")
        return EXIT_OK
    except StageFailure as exc:
        print(f"error in {exc}", file=sys.stderr)
        return _classify(exc.cause)
    except (ConfigError, DataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _classify(exc)
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
