"""Command-line interface.

Subcommands: ``run`` (execute an experiment config), ``score`` (aggregate a
record set, optionally against reference medians), ``gen`` (write a random
instance file), ``validate`` (check a config without running). Exit codes:
0 success, 1 validation/configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .bench import (
    ExperimentConfig,
    emit_report,
    load_records_csv,
    load_journal,
    load_reference_csv,
    run_matrix,
    score_records,
)
from .core import ConfigurationError, EngineError, ValidationError
from .domains import ParseError, generate_instance, write_instance
from .stats import ScoringError

log = logging.getLogger(__name__)

VALIDATION_ERRORS = (
    ConfigurationError,
    ValidationError,
    ParseError,
    ScoringError,
    FileNotFoundError,
)


def _cmd_run(args) -> int:
    config = ExperimentConfig.from_file(args.config)
    config.validate()
    records = run_matrix(config, progress=not args.quiet)
    reference = load_reference_csv(args.reference) if args.reference else None
    aggregates = score_records(records, reference=reference)
    paths = emit_report(aggregates, config.output_dir, records=records)
    for warning in aggregates["warnings"]:
        log.warning("%s", warning)
    print(f"wrote {', '.join(str(p) for p in paths.values())}")
    return 0


def _cmd_score(args) -> int:
    records_path = Path(args.records)
    if records_path.suffix == ".csv":
        records = load_records_csv(records_path)
    elif records_path.suffix == ".jsonl":
        records = load_journal(records_path.parent)
    else:
        records = load_journal(records_path)  # a matrix output directory
    if not records:
        raise ScoringError(f"no records found at {records_path}")
    reference = load_reference_csv(args.reference) if args.reference else None
    aggregates = score_records(records, reference=reference)
    out = args.out or str(records_path if records_path.is_dir() else records_path.parent)
    paths = emit_report(aggregates, out, records=records)
    print(f"wrote {', '.join(str(p) for p in paths.values())}")
    return 0


def _cmd_gen(args) -> int:
    instance = generate_instance(args.domain, args.size, args.seed)
    write_instance(instance, args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_validate(args) -> int:
    config = ExperimentConfig.from_file(args.config)
    config.validate()
    cells = len(config.methods) * len(config.instances) * len(config.seeds)
    print(f"config ok: {len(config.methods)} methods x {len(config.instances)} "
          f"instances x {len(config.seeds)} seeds = {cells} runs")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hyperhh",
        description="Selection hyper-heuristic benchmark harness.",
    )
    parser.add_argument("--quiet", action="store_true", help="suppress progress logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("--config", required=True, help="YAML experiment config")
    p_run.add_argument("--reference", help="reference medians CSV (instance, method, median)")
    p_run.set_defaults(func=_cmd_run)

    p_score = sub.add_parser("score", help="aggregate an existing record set")
    p_score.add_argument("--records", required=True,
                         help="records.jsonl, results.csv, or a matrix output directory")
    p_score.add_argument("--reference", help="reference medians CSV")
    p_score.add_argument("--out", help="report directory (defaults next to records)")
    p_score.set_defaults(func=_cmd_score)

    p_gen = sub.add_parser("gen", help="generate an instance file")
    p_gen.add_argument("--domain", required=True, choices=("maxsat", "binpacking", "tsp"))
    p_gen.add_argument("--size", required=True, type=int)
    p_gen.add_argument("--seed", required=True, type=int)
    p_gen.add_argument("--out", required=True)
    p_gen.set_defaults(func=_cmd_gen)

    p_val = sub.add_parser("validate", help="validate a config without running")
    p_val.add_argument("--config", required=True)
    p_val.set_defaults(func=_cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(asctime)s %(levelname)s %(message)s",
    )
    try:
        return args.func(args)
    except VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except EngineError as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
