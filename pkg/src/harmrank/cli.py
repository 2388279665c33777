"""Command-line entry points.

Subcommands::

    harmrank ingest       normalize any supported input layout to category/unit/weight rows
    harmrank compute      frequency table + concentration metrics + curve plots
    harmrank sensitivity  boundary / permutation / removal / clustering documents
    harmrank report       everything compute and sensitivity emit, in one tree
    harmrank serve        HTTP API for interactive what-if exploration

Exit codes: 0 success, 2 invalid input or configuration, 3 a computation
failed on valid input. The default output directory comes from
``$HARMRANK_OUT`` (falling back to ``./harmrank_out``).
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import Sequence

import harmrank
from harmrank.errors import ComputationError, ValidationError
from harmrank.ingest import Schema, parse_annotations, write_aggregated_triplets
from harmrank.pipeline import (
    ALL_MODES,
    DEFAULT_PERMUTATION_SWAPS,
    DEFAULT_PERMUTATION_TRIALS,
    DEFAULT_REMOVAL_FRACTIONS,
    DEFAULT_REMOVAL_TRIALS,
    RunConfig,
    run_pipeline,
    scenario_documents,
    write_documents,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_COMPUTATION = 3

OUT_ENV = "HARMRANK_OUT"
PORT_ENV = "HARMRANK_PORT"
DEFAULT_PORT = 8765


def _default_out() -> Path:
    return Path(os.environ.get(OUT_ENV, "harmrank_out"))


def _add_shared_flags(parser: argparse.ArgumentParser, need_input: bool = True) -> None:
    parser.add_argument("--input", required=need_input, type=Path, help="annotation file")
    parser.add_argument(
        "--schema",
        choices=[s.value for s in Schema],
        default=Schema.AGGREGATED_TRIPLETS.value,
        help="input layout (default: aggregated_triplets)",
    )
    parser.add_argument(
        "--severity-order",
        type=Path,
        default=None,
        help="severity ordering file, least severe first (default: packaged ordering)",
    )
    parser.add_argument(
        "--granularity",
        choices=["category", "subcategory"],
        default="category",
        help="row granularity of the frequency table",
    )
    parser.add_argument(
        "--ci-convention",
        choices=["survival", "ascending"],
        default="survival",
        help="criticality index direction (default: survival, larger = more severe)",
    )
    parser.add_argument("--seed", type=int, default=0, help="base seed for randomized scenarios")
    parser.add_argument(
        "--out",
        type=Path,
        default=None,
        help=f"output directory (default: ${OUT_ENV} or ./harmrank_out)",
    )


def _add_sensitivity_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--modes",
        default=",".join(ALL_MODES),
        help=f"comma-separated subset of {','.join(ALL_MODES)}",
    )
    parser.add_argument(
        "--swaps",
        default=",".join(str(k) for k in DEFAULT_PERMUTATION_SWAPS),
        help="comma-separated adjacent-swap counts for permutation scenarios",
    )
    parser.add_argument(
        "--permutation-trials", type=int, default=DEFAULT_PERMUTATION_TRIALS,
        help="scenarios per swap count",
    )
    parser.add_argument(
        "--fractions",
        default=",".join(str(f) for f in DEFAULT_REMOVAL_FRACTIONS),
        help="comma-separated removal fractions in [0,1)",
    )
    parser.add_argument(
        "--removal-trials", type=int, default=DEFAULT_REMOVAL_TRIALS,
        help="trials per removal fraction",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="harmrank",
        description="Rank AI harm categories by how much their annotation mass "
        "concentrates on severely affected groups.",
    )
    parser.add_argument("--version", action="version", version=f"harmrank {harmrank.__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="normalize annotations to category/unit/weight rows")
    p.add_argument("--input", required=True, type=Path)
    p.add_argument("--schema", choices=[s.value for s in Schema], required=True)
    p.add_argument("--out", type=Path, default=None, help="output file (default: stdout)")

    p = sub.add_parser("compute", help="metrics table, ranked priorities, curve plots")
    _add_shared_flags(p)

    p = sub.add_parser("sensitivity", help="perturbation scenarios and clustering")
    _add_shared_flags(p)
    _add_sensitivity_flags(p)

    p = sub.add_parser("report", help="full pipeline: compute + sensitivity in one tree")
    _add_shared_flags(p)
    _add_sensitivity_flags(p)

    p = sub.add_parser("serve", help="run the what-if HTTP API")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument(
        "--port", type=int, default=None, help=f"port (default: ${PORT_ENV} or {DEFAULT_PORT})"
    )
    p.add_argument("--capacity", type=int, default=64, help="max snapshots kept (LRU)")
    p.add_argument("--workers", type=int, default=4, help="scenario worker threads")
    p.add_argument("--input", type=Path, default=None, help="annotation file to preload")
    p.add_argument("--schema", choices=[s.value for s in Schema],
                   default=Schema.AGGREGATED_TRIPLETS.value)
    p.add_argument("--severity-order", type=Path, default=None)
    p.add_argument("--granularity", choices=["category", "subcategory"], default="category")
    p.add_argument("--ci-convention", choices=["survival", "ascending"], default="survival")
    return parser


def _parse_csv_list(text: str, kind: type, what: str):
    items = [item.strip() for item in text.split(",") if item.strip()]
    if not items:
        raise ValidationError(f"{what} list is empty")
    try:
        return tuple(kind(item) for item in items)
    except ValueError:
        raise ValidationError(f"invalid {what} list {text!r}") from None


def _config_from_args(args: argparse.Namespace, modes: tuple[str, ...]) -> RunConfig:
    out_dir = args.out if args.out is not None else _default_out()
    kwargs = {}
    if hasattr(args, "swaps"):
        kwargs.update(
            permutation_swaps=_parse_csv_list(args.swaps, int, "swap"),
            permutation_trials=args.permutation_trials,
            removal_fractions=_parse_csv_list(args.fractions, float, "fraction"),
            removal_trials=args.removal_trials,
        )
    return RunConfig(
        input_path=args.input,
        schema=Schema(args.schema),
        out_dir=out_dir,
        severity_order_path=args.severity_order,
        granularity=args.granularity,
        ci_convention=args.ci_convention,
        seed=args.seed,
        modes=modes,
        **kwargs,
    )


def _cmd_ingest(args: argparse.Namespace) -> int:
    result = parse_annotations(args.input, Schema(args.schema))
    for skipped in result.skipped:
        print(f"skipped line {skipped.line}: {skipped.reason}", file=sys.stderr)
    for warning in result.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    if args.out is None:
        write_aggregated_triplets(result.records, sys.stdout)
    else:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        with args.out.open("w", encoding="utf-8", newline="") as stream:
            write_aggregated_triplets(result.records, stream)
        print(
            f"wrote {len(result.records)} records "
            f"(total weight {result.total_weight}) to {args.out}",
            file=sys.stderr,
        )
    return EXIT_OK


def _cmd_run(args: argparse.Namespace, command: str) -> int:
    if command == "compute":
        modes: tuple[str, ...] = ()
    else:
        modes = _parse_csv_list(args.modes, str, "mode")
    config = _config_from_args(args, modes)
    result = run_pipeline(config)
    documents = result.documents
    if command == "sensitivity":
        documents = scenario_documents(documents)
    paths = write_documents(documents, config.out_dir)
    print(f"wrote {len(paths)} files to {config.out_dir}", file=sys.stderr)
    return EXIT_OK


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from harmrank.service import create_app

    preload = None
    if args.input is not None:
        preload = {
            "input_path": args.input,
            "schema": Schema(args.schema),
            "severity_order_path": args.severity_order,
            "granularity": args.granularity,
            "ci_convention": args.ci_convention,
        }
    port = args.port if args.port is not None else int(os.environ.get(PORT_ENV, DEFAULT_PORT))
    app = create_app(capacity=args.capacity, workers=args.workers, preload=preload)
    uvicorn.run(app, host=args.host, port=port, log_level="warning")
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "ingest":
            return _cmd_ingest(args)
        if args.command in ("compute", "sensitivity", "report"):
            return _cmd_run(args, args.command)
        if args.command == "serve":
            return _cmd_serve(args)
        raise ValidationError(f"unknown command {args.command!r}")
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ComputationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPUTATION


if __name__ == "__main__":
    sys.exit(main())
