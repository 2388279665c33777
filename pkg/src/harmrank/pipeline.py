"""End-to-end orchestration: ingest, order, score, perturb, emit.

A run is fully described by a :class:`RunConfig`; the emitted manifest
captures that config plus content digests of every input, so re-running
from the manifest reproduces the output tree byte for byte (nothing in any
document depends on time, host, or environment).

All documents are computed in memory first and written in one final pass;
a failure while writing removes whatever was already written, so an output
directory never holds a partial tree.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

import harmrank
from harmrank.errors import ValidationError
from harmrank.ingest import (
    AnnotationRecord,
    FrequencyTable,
    Granularity,
    ParseResult,
    Schema,
    SeverityOrdering,
    build_frequency_table,
    default_severity_ordering,
    parse_annotations,
    read_severity_ordering,
)
from harmrank.metrics import CategoryMetrics, compute_table_metrics
from harmrank.report import ReportBundle
from harmrank.sensitivity import (
    MAX_SEED,
    ScenarioResult,
    boundary_scenario,
    boundary_table,
    permutation_scenarios,
    removal_scenarios,
    ward_cluster,
)

ALL_MODES = ("boundary", "permutation", "removal", "cluster")
SCENARIO_DOC_PREFIXES = ("scenario_", "rho_", "scenarios.json", "dendrogram.svg")

DEFAULT_PERMUTATION_SWAPS = (1, 2, 5)
DEFAULT_PERMUTATION_TRIALS = 20
DEFAULT_REMOVAL_FRACTIONS = (0.1, 0.2, 0.5, 0.8)
DEFAULT_REMOVAL_TRIALS = 100


@dataclass(frozen=True)
class RunConfig:
    """Validated description of one pipeline run."""

    input_path: Path
    schema: Schema
    out_dir: Path
    severity_order_path: Path | None = None
    granularity: Granularity = Granularity.CATEGORY
    ci_convention: str = "survival"
    seed: int = 0
    modes: tuple[str, ...] = ALL_MODES
    permutation_swaps: tuple[int, ...] = DEFAULT_PERMUTATION_SWAPS
    permutation_trials: int = DEFAULT_PERMUTATION_TRIALS
    removal_fractions: tuple[float, ...] = DEFAULT_REMOVAL_FRACTIONS
    removal_trials: int = DEFAULT_REMOVAL_TRIALS

    def __post_init__(self) -> None:
        object.__setattr__(self, "input_path", Path(self.input_path))
        object.__setattr__(self, "out_dir", Path(self.out_dir))
        if self.severity_order_path is not None:
            object.__setattr__(self, "severity_order_path", Path(self.severity_order_path))
        object.__setattr__(self, "schema", Schema(self.schema))
        object.__setattr__(self, "granularity", Granularity(self.granularity))
        if self.ci_convention not in ("survival", "ascending"):
            raise ValidationError(f"unknown ci convention {self.ci_convention!r}")
        if not isinstance(self.seed, int) or not 0 <= self.seed <= MAX_SEED:
            raise ValidationError("seed must be a 64-bit unsigned integer")
        unknown = [m for m in self.modes if m not in ALL_MODES]
        if unknown:
            raise ValidationError(f"unknown sensitivity modes {unknown}; valid: {list(ALL_MODES)}")
        if len(set(self.modes)) != len(self.modes):
            raise ValidationError("duplicate sensitivity modes")
        if any(k < 1 for k in self.permutation_swaps):
            raise ValidationError("permutation swap counts must be >= 1")
        if self.permutation_trials < 1 or self.removal_trials < 1:
            raise ValidationError("trial counts must be >= 1")
        if any(not 0.0 <= f < 1.0 for f in self.removal_fractions):
            raise ValidationError("removal fractions must lie in [0, 1)")


@dataclass
class PipelineResult:
    """Everything a run produced, before (or without) touching disk."""

    config: RunConfig
    parse: ParseResult
    ordering: SeverityOrdering
    table: FrequencyTable
    metrics: list[CategoryMetrics]
    bundle: ReportBundle
    documents: dict[str, str] = field(default_factory=dict)

    @property
    def records(self) -> list[AnnotationRecord]:
        return self.parse.records


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _dump(payload: object) -> str:
    return json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n"


def build_manifest(config: RunConfig) -> str:
    """Reproduction manifest: tool version, config, input content digests."""
    ordering_digest = (
        _sha256(config.severity_order_path)
        if config.severity_order_path is not None
        else "packaged-default"
    )
    manifest = {
        "tool": {"name": "harmrank", "version": harmrank.__version__},
        "config": {
            "input": str(config.input_path),
            "schema": config.schema.value,
            "severity_order": (
                str(config.severity_order_path) if config.severity_order_path else None
            ),
            "granularity": config.granularity.value,
            "ci_convention": config.ci_convention,
            "seed": config.seed,
            "modes": list(config.modes),
            "permutation_swaps": list(config.permutation_swaps),
            "permutation_trials": config.permutation_trials,
            "removal_fractions": list(config.removal_fractions),
            "removal_trials": config.removal_trials,
        },
        "inputs": {
            "input_sha256": _sha256(config.input_path),
            "severity_order_sha256": ordering_digest,
        },
    }
    return _dump(manifest)


def _ingest_report(parse: ParseResult, table: FrequencyTable) -> str:
    return _dump(
        {
            "records": len(parse.records),
            "total_weight": parse.total_weight,
            "categories": len(table.categories),
            "degenerate": list(table.degenerate),
            "unmapped": dict(table.unmapped),
            "skipped": [{"line": s.line, "reason": s.reason} for s in parse.skipped],
            "warnings": list(parse.warnings),
        }
    )


def run_pipeline(config: RunConfig) -> PipelineResult:
    """Execute ingest → ordering → metrics → requested perturbations.

    Returns the full in-memory result; use :func:`write_result` to put the
    document tree on disk.
    """
    parse = parse_annotations(config.input_path, config.schema)
    ordering = (
        read_severity_ordering(config.severity_order_path)
        if config.severity_order_path is not None
        else default_severity_ordering()
    )
    table = build_frequency_table(parse.records, ordering, config.granularity)
    metrics = compute_table_metrics(table, config.ci_convention)

    boundary = None
    scenarios: list[ScenarioResult] = []
    merges = None
    if "boundary" in config.modes:
        boundary = boundary_table(table)
        scenarios.append(boundary_scenario(table, config.seed, config.ci_convention))
    if "permutation" in config.modes:
        for k in config.permutation_swaps:
            scenarios.append(
                permutation_scenarios(
                    table, ordering, k, config.permutation_trials,
                    config.seed, config.ci_convention,
                )
            )
    if "removal" in config.modes:
        scenarios.extend(
            removal_scenarios(
                parse.records,
                config.removal_fractions,
                config.removal_trials,
                config.seed,
                ordering,
                config.granularity,
                config.ci_convention,
            )
        )
    if "cluster" in config.modes and len(table.active_categories) >= 2:
        active = list(table.active_categories)
        merges = ward_cluster(np.stack([table.count_row(c) for c in active]), active)

    bundle = ReportBundle(
        metrics=metrics,
        table=table,
        ci_convention=config.ci_convention,
        boundary=boundary,
        scenarios=scenarios,
        merges=merges,
        extra={
            "manifest.json": build_manifest(config),
            "ingest_report.json": _ingest_report(parse, table),
        },
    )
    return PipelineResult(
        config=config,
        parse=parse,
        ordering=ordering,
        table=table,
        metrics=metrics,
        bundle=bundle,
        documents=bundle.documents(),
    )


def scenario_documents(documents: dict[str, str]) -> dict[str, str]:
    """The subset of a document tree produced by sensitivity analysis."""
    keep = {}
    for name, content in documents.items():
        if name.startswith(SCENARIO_DOC_PREFIXES[:2]) or name in SCENARIO_DOC_PREFIXES[2:]:
            keep[name] = content
        elif name in ("manifest.json", "ingest_report.json"):
            keep[name] = content
    return keep


def write_documents(documents: dict[str, str], out_dir: Path) -> list[Path]:
    """Write a document tree; on failure, remove everything written."""
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    try:
        for name in sorted(documents):
            path = out_dir / name
            path.write_text(documents[name], encoding="utf-8", newline="\n")
            written.append(path)
    except BaseException:
        for path in written:
            try:
                path.unlink()
            except OSError:
                pass
        raise
    return written


def write_result(result: PipelineResult, only: dict[str, str] | None = None) -> list[Path]:
    return write_documents(only if only is not None else result.documents, result.config.out_dir)
