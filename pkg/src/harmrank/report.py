"""Deterministic report emission: tables, structured documents, SVG plots.

Every emitter is a pure function from computed results to text, with three
rules that make outputs diff- and golden-file friendly:

* numbers are rendered at fixed 4-decimal precision (round-half-even), with
  undefined values as ``NA`` in delimited text and ``null`` in structured
  text;
* iteration orders are explicit (rank order for metrics, name order for
  legends, stored order for correlation labels) — nothing depends on dict
  or set iteration;
* documents carry no timestamps, hostnames, or other run-varying content,
  so identical inputs yield byte-identical bytes.

The structured payload builders double as the service's response bodies,
keeping CLI files and API responses literally the same data.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence
from xml.sax.saxutils import escape

from harmrank.errors import ValidationError
from harmrank.ingest import FrequencyTable
from harmrank.metrics import CategoryMetrics, Polyline, classic_lorenz, derivative_lorenz
from harmrank.sensitivity import Merge, ScenarioKind, ScenarioResult

DELIMITER = ","
NA = "NA"

# Qualitative palette, dark enough for white backgrounds; cycled if exhausted.
PALETTE = (
    "#1b6ca8", "#c2452d", "#2e8540", "#8354a1", "#b58900",
    "#0f7c7c", "#c23b80", "#5c6bc0", "#7a5230", "#4b6b1f",
    "#aa3939", "#2d6a6a",
)


def fmt4(value: float | None) -> str:
    """Fixed 4-decimal rendering; NA for missing values."""
    if value is None or math.isnan(value):
        return NA
    text = f"{value:.4f}"
    return "0.0000" if text == "-0.0000" else text


def round4(value: float | None) -> float | None:
    """4-decimal rounded float for structured payloads; None for missing."""
    if value is None or math.isnan(value):
        return None
    rounded = round(value, 4)
    return 0.0 if rounded == 0.0 else rounded


def _dump(payload: object) -> str:
    return json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n"


def metrics_payload(
    metrics: Sequence[CategoryMetrics],
    boundary: Mapping[str, tuple[float, float]] | None = None,
    table: FrequencyTable | None = None,
    ci_convention: str = "survival",
) -> dict:
    """Structured metrics document: ranked categories, optional bounds, curves.

    All floats arrive rounded to 4 decimals so a consumer can display them
    verbatim. ``best_aih``/``worst_aih`` appear only when a boundary
    analysis was run; per-category curve points appear when the frequency
    table is supplied.
    """
    if not metrics:
        raise ValidationError("metrics payload needs at least one category")
    rows = []
    for cm in sorted(metrics, key=lambda c: c.rank):
        row: dict = {
            "category": cm.category,
            "aih": round4(cm.aih),
            "ci": round4(cm.ci),
            "gini": round4(cm.gini),
            "mean_rank": round4(cm.mean_rank),
            "m": cm.m,
            "rank": cm.rank,
        }
        if boundary is not None:
            best, worst = boundary[cm.category]
            row["best_aih"] = round4(best)
            row["worst_aih"] = round4(worst)
        if table is not None:
            freqs = table.row(cm.category)
            row["lorenz_derivative"] = polyline_payload(derivative_lorenz(freqs))
            row["lorenz_classic"] = polyline_payload(classic_lorenz(freqs))
        rows.append(row)
    payload: dict = {"ci_convention": ci_convention, "categories": rows}
    if table is not None:
        payload["units"] = list(table.units)
        payload["m"] = table.m
        if table.degenerate:
            payload["degenerate"] = list(table.degenerate)
        if table.unmapped:
            payload["unmapped"] = dict(table.unmapped)
    return payload


def polyline_payload(curve: Polyline) -> dict:
    return {
        "x": [round4(v) for v in curve.x],
        "y": [round4(v) for v in curve.y],
    }


def emit_metrics(
    metrics: Sequence[CategoryMetrics],
    fmt: str = "delimited",
    boundary: Mapping[str, tuple[float, float]] | None = None,
    table: FrequencyTable | None = None,
    ci_convention: str = "survival",
) -> str:
    """Metrics table as delimited text or a structured document.

    Delimited columns are ``category, aih, ci, gini, rank`` plus
    ``best_aih, worst_aih`` when boundary bounds are given; rows come in
    rank order.
    """
    if fmt == "structured":
        return _dump(metrics_payload(metrics, boundary, table, ci_convention))
    if fmt != "delimited":
        raise ValidationError(f"unknown metrics format {fmt!r}")
    if not metrics:
        raise ValidationError("metrics table needs at least one category")
    header = ["category", "aih", "ci", "gini", "rank"]
    if boundary is not None:
        header += ["best_aih", "worst_aih"]
    lines = [DELIMITER.join(header)]
    for cm in sorted(metrics, key=lambda c: c.rank):
        cells = [
            _quote(cm.category),
            fmt4(cm.aih),
            fmt4(cm.ci),
            fmt4(cm.gini),
            str(cm.rank),
        ]
        if boundary is not None:
            best, worst = boundary[cm.category]
            cells += [fmt4(best), fmt4(worst)]
        lines.append(DELIMITER.join(cells))
    return "\n".join(lines) + "\n"


def _quote(cell: str) -> str:
    if DELIMITER in cell or '"' in cell or "\n" in cell:
        return '"' + cell.replace('"', '""') + '"'
    return cell


def parse_metrics(document: str) -> dict:
    """Inverse of the structured emit_metrics (round-trip checks)."""
    return json.loads(document)


def scenario_payload(result: ScenarioResult) -> dict:
    """Structured form of a ScenarioResult, floats rounded, NaN as null."""
    spec = result.spec
    spec_doc: dict = {"kind": spec.kind.value, "base_seed": spec.base_seed}
    if spec.k_swaps is not None:
        spec_doc["k_swaps"] = spec.k_swaps
    if spec.removal_fraction is not None:
        spec_doc["removal_fraction"] = round4(spec.removal_fraction)
    if spec.trials is not None:
        spec_doc["trials"] = spec.trials
    return {
        "spec": spec_doc,
        "per_category": {
            s.category: {
                "mean_aih": round4(s.mean_aih),
                "stddev": round4(s.stddev),
                "lo": round4(s.lo),
                "hi": round4(s.hi),
                "mean_ci": round4(s.mean_ci),
                "n_trials": s.n_trials,
            }
            for s in result.stats
        },
        "correlation_labels": list(result.correlation_labels),
        "rank_correlations": [
            [round4(v) for v in row] for row in result.rank_correlations.tolist()
        ],
    }


def _scenario_tag(result: ScenarioResult) -> str:
    spec = result.spec
    if spec.kind is ScenarioKind.PERMUTATION:
        return f"permutation_k{spec.k_swaps}"
    if spec.kind is ScenarioKind.REMOVAL:
        return f"removal_f{fmt4(spec.removal_fraction)}"
    return "boundary"


def emit_rho_grid(result: ScenarioResult) -> str:
    """The scenario's Spearman matrix as a symmetric delimited grid."""
    labels = result.correlation_labels
    lines = [DELIMITER.join([""] + [_quote(l) for l in labels])]
    for label, row in zip(labels, result.rank_correlations):
        lines.append(DELIMITER.join([_quote(label)] + [fmt4(v) for v in row]))
    return "\n".join(lines) + "\n"


def emit_scenario_report(results: Sequence[ScenarioResult]) -> dict[str, str]:
    """Document set for a batch of scenario results.

    Per kind, a trend table keyed by the swept parameter (k or fraction)
    with mean and interval bounds per category; per result, its rho grid;
    plus one structured document holding everything.
    """
    if not results:
        raise ValidationError("scenario report needs at least one result")
    documents: dict[str, str] = {}

    by_kind: dict[ScenarioKind, list[ScenarioResult]] = {}
    for result in results:
        by_kind.setdefault(result.spec.kind, []).append(result)

    if ScenarioKind.PERMUTATION in by_kind:
        rows = [DELIMITER.join(
            ["k_swaps", "category", "mean_aih", "stddev", "lo", "hi", "mean_ci", "n_trials"]
        )]
        ordered = sorted(by_kind[ScenarioKind.PERMUTATION], key=lambda r: r.spec.k_swaps)
        for result in ordered:
            for s in result.stats:
                rows.append(DELIMITER.join([
                    str(result.spec.k_swaps), _quote(s.category), fmt4(s.mean_aih),
                    fmt4(s.stddev), fmt4(s.lo), fmt4(s.hi), fmt4(s.mean_ci), str(s.n_trials),
                ]))
        documents["scenario_permutation_trend.csv"] = "\n".join(rows) + "\n"

    if ScenarioKind.REMOVAL in by_kind:
        rows = [DELIMITER.join(
            ["fraction", "category", "mean_aih", "stddev", "lo", "hi", "mean_ci", "n_trials"]
        )]
        ordered = sorted(by_kind[ScenarioKind.REMOVAL], key=lambda r: r.spec.removal_fraction)
        for result in ordered:
            for s in result.stats:
                rows.append(DELIMITER.join([
                    fmt4(result.spec.removal_fraction), _quote(s.category), fmt4(s.mean_aih),
                    fmt4(s.stddev), fmt4(s.lo), fmt4(s.hi), fmt4(s.mean_ci), str(s.n_trials),
                ]))
        documents["scenario_removal_trend.csv"] = "\n".join(rows) + "\n"

    if ScenarioKind.BOUNDARY in by_kind:
        rows = [DELIMITER.join(["category", "baseline_aih", "best_aih", "worst_aih", "mean_ci"])]
        for result in by_kind[ScenarioKind.BOUNDARY]:
            for s in result.stats:
                rows.append(DELIMITER.join([
                    _quote(s.category), fmt4(s.mean_aih), fmt4(s.lo), fmt4(s.hi), fmt4(s.mean_ci),
                ]))
        documents["scenario_boundary.csv"] = "\n".join(rows) + "\n"

    for result in results:
        documents[f"rho_{_scenario_tag(result)}.csv"] = emit_rho_grid(result)

    documents["scenarios.json"] = _dump([scenario_payload(r) for r in results])
    return documents


# --- SVG plotting -----------------------------------------------------------

_WIDTH, _HEIGHT = 640, 480
_PLOT_X, _PLOT_Y, _PLOT_SIDE = 60.0, 30.0, 390.0
_FONT = 'font-family="Helvetica, Arial, sans-serif"'


def _px(x: float) -> str:
    return f"{_PLOT_X + x * _PLOT_SIDE:.2f}"


def _py(y: float) -> str:
    return f"{_PLOT_Y + (1.0 - y) * _PLOT_SIDE:.2f}"


def _svg_open(width: int = _WIDTH, height: int = _HEIGHT) -> list[str]:
    return [
        '<svg xmlns="http://www.w3.org/2000/svg" '
        f'viewBox="0 0 {width} {height}" width="{width}" height="{height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
    ]


def _axes(x_label: str, y_label: str) -> list[str]:
    parts = [
        f'<rect x="{_PLOT_X:.2f}" y="{_PLOT_Y:.2f}" width="{_PLOT_SIDE:.2f}" '
        f'height="{_PLOT_SIDE:.2f}" fill="none" stroke="#222222" stroke-width="1"/>'
    ]
    for i in range(5):
        t = i / 4.0
        label = f"{t:.2f}"
        parts.append(
            f'<line x1="{_px(t)}" y1="{_py(0)}" x2="{_px(t)}" '
            f'y2="{float(_py(0)) + 4:.2f}" stroke="#222222" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_px(t)}" y="{float(_py(0)) + 16:.2f}" {_FONT} font-size="10" '
            f'text-anchor="middle">{label}</text>'
        )
        parts.append(
            f'<line x1="{_px(0)}" y1="{_py(t)}" x2="{float(_px(0)) - 4:.2f}" '
            f'y2="{_py(t)}" stroke="#222222" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{float(_px(0)) - 7:.2f}" y="{float(_py(t)) + 3:.2f}" {_FONT} '
            f'font-size="10" text-anchor="end">{label}</text>'
        )
    parts.append(
        f'<text x="{_px(0.5)}" y="{float(_py(0)) + 32:.2f}" {_FONT} font-size="11" '
        f'text-anchor="middle">{escape(x_label)}</text>'
    )
    parts.append(
        f'<text x="14" y="{_py(0.5)}" {_FONT} font-size="11" text-anchor="middle" '
        f'transform="rotate(-90 14 {_py(0.5)})">{escape(y_label)}</text>'
    )
    return parts


def emit_lorenz_plot(curves: Mapping[str, Polyline], kind: str = "derivative") -> str:
    """Overlay plot of one curve per category with the 45-degree reference.

    The unit square maps linearly onto the plot viewport; legend entries are
    sorted by category name and use the same palette order as the strokes.
    """
    if not curves:
        raise ValidationError("lorenz plot needs at least one curve")
    if kind == "derivative":
        y_label = "cumulative share of severity ranks"
    elif kind == "classic":
        y_label = "cumulative share of severity mass"
    else:
        raise ValidationError(f"unknown curve kind {kind!r}")

    names = sorted(curves)
    parts = _svg_open()
    parts += _axes("cumulative share of annotations", y_label)
    parts.append(
        f'<line x1="{_px(0)}" y1="{_py(0)}" x2="{_px(1)}" y2="{_py(1)}" '
        'stroke="#888888" stroke-width="1" stroke-dasharray="5,4"/>'
    )
    for i, name in enumerate(names):
        curve = curves[name]
        color = PALETTE[i % len(PALETTE)]
        points = " ".join(f"{_px(x)},{_py(y)}" for x, y in zip(curve.x, curve.y))
        parts.append(
            f'<polyline points="{points}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
    legend_x = _PLOT_X + _PLOT_SIDE + 14
    for i, name in enumerate(names):
        color = PALETTE[i % len(PALETTE)]
        y = _PLOT_Y + 10 + i * 16
        parts.append(
            f'<rect x="{legend_x:.2f}" y="{y:.2f}" width="10" height="10" fill="{color}"/>'
        )
        parts.append(
            f'<text x="{legend_x + 14:.2f}" y="{y + 9:.2f}" {_FONT} font-size="10">'
            f"{escape(name)}</text>"
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_heatmap(table: FrequencyTable) -> str:
    """Grayscale frequency heatmap, categories by rows, severity left→right."""
    categories = table.categories
    if not categories:
        raise ValidationError("heatmap needs at least one category")
    cell, left, top = 34, 210, 96
    width = left + table.m * cell + 20
    height = top + len(categories) * cell + 20
    parts = _svg_open(width, height)
    for j, unit in enumerate(table.units):
        x = left + j * cell + cell / 2
        parts.append(
            f'<text x="{x:.2f}" y="{top - 8:.2f}" {_FONT} font-size="9" text-anchor="start" '
            f'transform="rotate(-45 {x:.2f} {top - 8:.2f})">{escape(unit)}</text>'
        )
    for i, category in enumerate(categories):
        y = top + i * cell
        parts.append(
            f'<text x="{left - 6:.2f}" y="{y + cell / 2 + 3:.2f}" {_FONT} font-size="10" '
            f'text-anchor="end">{escape(category)}</text>'
        )
        for j in range(table.m):
            value = table.freqs[i, j]
            if math.isnan(value):
                fill = "#eeeeee"
                label = NA
            else:
                shade = int(round(255 - 195 * min(1.0, max(0.0, value))))
                fill = f"#{shade:02x}{shade:02x}ff"
                label = f"{value:.2f}"
            x = left + j * cell
            parts.append(
                f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="{fill}" '
                'stroke="#ffffff" stroke-width="1"/>'
            )
            parts.append(
                f'<text x="{x + cell / 2:.2f}" y="{y + cell / 2 + 3:.2f}" {_FONT} '
                f'font-size="8" text-anchor="middle">{label}</text>'
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_dendrogram(merges: Sequence[Merge], categories: Sequence[str]) -> str:
    """Dendrogram of an agglomeration run, leaves along the bottom edge."""
    if not merges:
        raise ValidationError("dendrogram needs at least one merge")
    n = len(merges) + 1
    if len(categories) != n:
        raise ValidationError("category count does not match merge list")

    # Leaf display order: depth-first through the merge tree from the root.
    children: dict[int, tuple[int, int]] = {
        n + t: (m.left, m.right) for t, m in enumerate(merges)
    }

    def leaves(node: int) -> list[int]:
        if node < n:
            return [node]
        left, right = children[node]
        return leaves(left) + leaves(right)

    order = leaves(n + len(merges) - 1)
    left_pad, top_pad, bottom_pad = 60.0, 24.0, 150.0
    width, height = max(400, 40 * n + int(left_pad) + 20), 420
    span = width - left_pad - 24
    plot_h = height - top_pad - bottom_pad
    max_d = max(m.distance for m in merges) or 1.0

    def x_of(i: int) -> float:
        return left_pad + (span / n) * (i + 0.5)

    def y_of(d: float) -> float:
        return top_pad + plot_h * (1.0 - d / max_d)

    position: dict[int, tuple[float, float]] = {
        leaf: (x_of(order.index(leaf)), y_of(0.0)) for leaf in range(n)
    }
    parts = _svg_open(width, height)
    for t, merge in enumerate(merges):
        (x1, y1), (x2, y2) = position[merge.left], position[merge.right]
        y = y_of(merge.distance)
        color = "#1b6ca8"
        parts.append(
            f'<polyline points="{x1:.2f},{y1:.2f} {x1:.2f},{y:.2f} {x2:.2f},{y:.2f} '
            f'{x2:.2f},{y2:.2f}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
        parts.append(
            f'<text x="{(x1 + x2) / 2:.2f}" y="{y - 3:.2f}" {_FONT} font-size="8" '
            f'text-anchor="middle">{fmt4(merge.distance)}</text>'
        )
        position[n + t] = ((x1 + x2) / 2.0, y)
    for leaf in range(n):
        x, y = position[leaf]
        parts.append(
            f'<text x="{x:.2f}" y="{y + 10:.2f}" {_FONT} font-size="9" text-anchor="end" '
            f'transform="rotate(-55 {x:.2f} {y + 10:.2f})">{escape(categories[leaf])}</text>'
        )
    parts.append(
        f'<text x="{left_pad / 2:.2f}" y="{top_pad - 8:.2f}" {_FONT} font-size="10" '
        'text-anchor="start">linkage distance</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


@dataclass
class ReportBundle:
    """Everything one run emits, as named in-memory documents.

    ``documents()`` maps file name to exact content, so determinism checks
    can compare whole trees without touching the filesystem.
    """

    metrics: Sequence[CategoryMetrics]
    table: FrequencyTable
    ci_convention: str = "survival"
    boundary: Mapping[str, tuple[float, float]] | None = None
    scenarios: Sequence[ScenarioResult] = ()
    merges: Sequence[Merge] | None = None
    extra: Mapping[str, str] = field(default_factory=dict)

    def documents(self) -> dict[str, str]:
        docs: dict[str, str] = {}
        docs["metrics.csv"] = emit_metrics(
            self.metrics, "delimited", self.boundary, ci_convention=self.ci_convention
        )
        docs["metrics.json"] = emit_metrics(
            self.metrics, "structured", self.boundary, self.table, self.ci_convention
        )
        derivative = {c: derivative_lorenz(self.table.row(c)) for c in self.table.active_categories}
        classic = {c: classic_lorenz(self.table.row(c)) for c in self.table.active_categories}
        docs["lorenz_derivative.svg"] = emit_lorenz_plot(derivative, "derivative")
        docs["lorenz_classic.svg"] = emit_lorenz_plot(classic, "classic")
        docs["frequency_heatmap.svg"] = emit_heatmap(self.table)
        if self.scenarios:
            docs.update(emit_scenario_report(list(self.scenarios)))
        if self.merges is not None:
            active = list(self.table.active_categories)
            docs["dendrogram.svg"] = emit_dendrogram(self.merges, active)
        for name, content in self.extra.items():
            docs[name] = content
        return docs


def iter_documents(bundle: ReportBundle) -> Iterable[tuple[str, str]]:
    return sorted(bundle.documents().items())
