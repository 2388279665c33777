/**
 * HTML/SVG builders. Each function turns service payloads (plus view
 * state) into markup strings; main.ts assigns them to the document. They
 * are pure, so the test suite can assert on displayed text without a
 * browser.
 *
 * Numeric cells carry data-cat/data-field attributes naming the payload
 * field they display — the fidelity tests use these to check that what is
 * on screen is exactly what the service sent.
 */

import { NA, cell2, cell4, escapeHtml, signed4 } from "./format.js";
import { aihDeltas } from "./state.js";
import type { Status, SweepPoint } from "./state.js";
import type {
  CategoryStatsPayload,
  MetricsPayload,
  PolylinePayload,
  ScenarioPayload,
} from "./types.js";

// -- severity list ------------------------------------------------------------

/** Draggable severity list, least severe first. */
export function renderSeverityList(ordering: readonly string[]): string {
  const items = ordering.map(
    (unit, index) => `
    <li draggable="true" data-unit="${escapeHtml(unit)}" data-index="${index}">
      <span class="grip">⋮⋮</span>
      <span class="unit-rank">${index + 1}</span>
      <span class="unit-name">${escapeHtml(unit)}</span>
    </li>`,
  );
  return items.join("\n");
}

// -- ranking table ------------------------------------------------------------

function numCell(category: string, field: string, text: string, cls = "num"): string {
  return `<td class="${cls}" data-cat="${escapeHtml(category)}" data-field="${field}">${text}</td>`;
}

/**
 * Ranked category table. When a pre-reorder payload is given, a ΔAIH
 * column shows how each category's AIH moved — the difference of the two
 * payload values, nothing recomputed.
 */
export function renderRankingTable(
  payload: MetricsPayload,
  previous: MetricsPayload | null = null,
  selectedCategory: string | null = null,
): string {
  const hasBounds = payload.categories.some((row) => row.best_aih !== undefined);
  const deltas = previous ? aihDeltas(previous, payload) : null;
  const head = [
    "<th>#</th>",
    '<th class="left">Category</th>',
    "<th>AIH</th>",
    deltas ? "<th>ΔAIH</th>" : "",
    "<th>CI</th>",
    "<th>Gini</th>",
    hasBounds ? "<th>Best</th><th>Worst</th>" : "",
  ].join("");
  const body = payload.categories
    .map((row) => {
      const cat = row.category;
      const delta = deltas?.get(cat)?.delta ?? null;
      const cells = [
        numCell(cat, "rank", String(row.rank)),
        `<td class="left" data-cat="${escapeHtml(cat)}" data-field="category">${escapeHtml(cat)}</td>`,
        numCell(cat, "aih", cell4(row.aih)),
        deltas
          ? numCell(cat, "aih_delta", delta === null ? NA : signed4(delta), "num delta")
          : "",
        numCell(cat, "ci", cell4(row.ci)),
        numCell(cat, "gini", cell4(row.gini)),
        hasBounds ? numCell(cat, "best_aih", cell4(row.best_aih)) : "",
        hasBounds ? numCell(cat, "worst_aih", cell4(row.worst_aih)) : "",
      ].join("");
      const cls = cat === selectedCategory ? ' class="selected"' : "";
      return `<tr data-cat="${escapeHtml(cat)}"${cls}>${cells}</tr>`;
    })
    .join("\n");
  return `<table class="rank-table"><thead><tr>${head}</tr></thead><tbody>${body}</tbody></table>`;
}

// -- SVG helpers --------------------------------------------------------------

const CHART_W = 360;
const CHART_H = 280;
const PAD = 34;

function sx(x: number): number {
  return PAD + x * (CHART_W - 2 * PAD);
}

function sy(y: number): number {
  return CHART_H - PAD - y * (CHART_H - 2 * PAD);
}

function pathFrom(curve: PolylinePayload): string {
  const points: string[] = [];
  for (let i = 0; i < curve.x.length; i++) {
    const x = curve.x[i];
    const y = curve.y[i];
    if (x === null || y === null || x === undefined || y === undefined) continue;
    points.push(`${sx(x).toFixed(2)},${sy(y).toFixed(2)}`);
  }
  return points.join(" ");
}

function chartFrame(): string {
  return (
    `<rect class="plot-bg" x="${PAD}" y="${PAD}" width="${CHART_W - 2 * PAD}"` +
    ` height="${CHART_H - 2 * PAD}"/>` +
    `<line class="diag" x1="${sx(0)}" y1="${sy(0)}" x2="${sx(1)}" y2="${sy(1)}"/>`
  );
}

// -- Lorenz overlay -----------------------------------------------------------

export interface LorenzCurves {
  category: string;
  derivative: PolylinePayload;
  classic?: PolylinePayload;
}

/**
 * Both curve constructions for one category, overlaid with the equality
 * diagonal. Points come verbatim from the payload's x/y arrays.
 */
export function renderLorenzOverlay(curves: LorenzCurves): string {
  const classic = curves.classic
    ? `<polyline class="curve classic" data-curve="classic" points="${pathFrom(curves.classic)}"/>`
    : "";
  return `<svg viewBox="0 0 ${CHART_W} ${CHART_H}" role="img" aria-label="Lorenz curves">
  ${chartFrame()}
  <polyline class="curve derivative" data-curve="derivative" points="${pathFrom(curves.derivative)}"/>
  ${classic}
  <text class="title" x="${CHART_W / 2}" y="16">${escapeHtml(curves.category)}</text>
  <text class="axis" x="${CHART_W / 2}" y="${CHART_H - 8}">cumulative share</text>
</svg>`;
}

// -- scenario trend chart -------------------------------------------------------

/**
 * Mean AIH ± one standard deviation for the selected category across the
 * completed sweep (one point per removal fraction or k). Every plotted
 * value is a field of some scenario payload; the data-value attribute on
 * each point carries the displayed text.
 */
export function renderTrendChart(sweep: readonly SweepPoint[], category: string | null): string {
  if (!category || sweep.length === 0) {
    return `<svg viewBox="0 0 ${CHART_W} ${CHART_H}"><text class="empty" x="${CHART_W / 2}" y="${CHART_H / 2}">run a permutation or removal sweep</text></svg>`;
  }
  const atMax = Math.max(...sweep.map((p) => p.at), 1);
  const marks: string[] = [];
  const line: string[] = [];
  for (const point of sweep) {
    const stats: CategoryStatsPayload | undefined = point.payload.per_category[category];
    if (!stats || stats.mean_aih === null) continue;
    const x = sx(point.at / atMax);
    const y = sy(stats.mean_aih);
    line.push(`${x.toFixed(2)},${y.toFixed(2)}`);
    if (stats.stddev !== null && stats.stddev > 0) {
      const lo = sy(Math.max(0, stats.mean_aih - stats.stddev));
      const hi = sy(Math.min(1, stats.mean_aih + stats.stddev));
      marks.push(
        `<line class="whisker" x1="${x.toFixed(2)}" y1="${lo.toFixed(2)}" x2="${x.toFixed(2)}" y2="${hi.toFixed(2)}"/>`,
      );
    }
    marks.push(
      `<circle class="point" cx="${x.toFixed(2)}" cy="${y.toFixed(2)}" r="3.5"` +
        ` data-at="${point.label}" data-value="${cell4(stats.mean_aih)}">` +
        `<title>${escapeHtml(category)} @ ${escapeHtml(point.label)}: mean AIH ${cell4(stats.mean_aih)} ± ${cell4(stats.stddev)}</title>` +
        `</circle>`,
    );
    marks.push(
      `<text class="tick" x="${x.toFixed(2)}" y="${CHART_H - PAD + 14}">${escapeHtml(point.label)}</text>`,
    );
  }
  return `<svg viewBox="0 0 ${CHART_W} ${CHART_H}" role="img" aria-label="scenario trend">
  ${chartFrame()}
  <polyline class="trend" points="${line.join(" ")}"/>
  ${marks.join("\n  ")}
  <text class="title" x="${CHART_W / 2}" y="16">${escapeHtml(category)} under ${escapeHtml(sweep[0].payload.spec.kind)}</text>
</svg>`;
}

// -- rank-correlation grid ------------------------------------------------------

/** Background colour for a correlation value (presentation only). */
function rhoColor(value: number | null): string {
  if (value === null) return "#777";
  const t = Math.max(0, Math.min(1, (value + 1) / 2));
  const hue = Math.round(t * 120); // red (−1) → green (+1)
  return `hsl(${hue} 65% 45%)`;
}

/**
 * Spearman ρ heatmap over the scenario's correlation labels. Cell values
 * are payload entries; grids small enough to stay legible also print the
 * 2-decimal value inside each cell, larger ones keep it in the tooltip.
 */
export function renderRhoGrid(scenario: ScenarioPayload): string {
  const labels = scenario.correlation_labels;
  const n = labels.length;
  if (n === 0) return "<svg viewBox='0 0 10 10'></svg>";
  const size = 420;
  const left = 90;
  const top = 60;
  const cellPx = Math.max(8, Math.floor((size - left) / n));
  const width = left + n * cellPx + 10;
  const height = top + n * cellPx + 10;
  const showText = n <= 12;
  const cells: string[] = [];
  for (let i = 0; i < n; i++) {
    for (let j = 0; j < n; j++) {
      const value = scenario.rank_correlations[i]?.[j] ?? null;
      const x = left + j * cellPx;
      const y = top + i * cellPx;
      cells.push(
        `<rect x="${x}" y="${y}" width="${cellPx}" height="${cellPx}"` +
          ` fill="${rhoColor(value)}" data-i="${i}" data-j="${j}">` +
          `<title>ρ(${escapeHtml(labels[i])}, ${escapeHtml(labels[j])}) = ${cell4(value)}</title></rect>`,
      );
      if (showText) {
        cells.push(
          `<text class="cell" x="${x + cellPx / 2}" y="${y + cellPx / 2 + 3}"` +
            ` data-i="${i}" data-j="${j}">${cell2(value)}</text>`,
        );
      }
    }
  }
  const rowLabels = labels
    .map((label, i) => {
      const y = top + i * cellPx + cellPx / 2 + 3;
      return `<text class="lab row" x="${left - 6}" y="${y}">${escapeHtml(shorten(label))}</text>`;
    })
    .join("\n  ");
  const colLabels = labels
    .map((label, j) => {
      const x = left + j * cellPx + cellPx / 2;
      return `<text class="lab col" x="${x}" y="${top - 8}" transform="rotate(-45 ${x} ${top - 8})">${escapeHtml(shorten(label))}</text>`;
    })
    .join("\n  ");
  return `<svg viewBox="0 0 ${width} ${height}" role="img" aria-label="rank correlation grid">
  ${rowLabels}
  ${colLabels}
  ${cells.join("\n  ")}
</svg>`;
}

function shorten(label: string): string {
  return label.length > 12 ? `${label.slice(0, 11)}…` : label;
}

// -- boundary panel ---------------------------------------------------------------

/**
 * Best/worst-case AIH per category from a boundary scenario payload. The
 * Σ column adds the two payload fields; the pair always sums to 1.00 —
 * rendering it makes the invariant visible.
 */
export function renderBoundaryPanel(scenario: ScenarioPayload): string {
  const categories = Object.keys(scenario.per_category).sort((a, b) =>
    a.localeCompare(b),
  );
  const rows = categories
    .map((category) => {
      const stats = scenario.per_category[category];
      const sum =
        stats.lo === null || stats.hi === null ? null : stats.lo + stats.hi;
      return (
        `<tr data-cat="${escapeHtml(category)}">` +
        `<td class="left" data-field="category">${escapeHtml(category)}</td>` +
        numCell(category, "baseline_aih", cell4(stats.mean_aih)) +
        numCell(category, "worst", cell4(stats.lo)) +
        numCell(category, "best", cell4(stats.hi)) +
        numCell(category, "sum", cell2(sum)) +
        `</tr>`
      );
    })
    .join("\n");
  return `<table class="boundary-table"><thead><tr><th class="left">Category</th><th>Baseline</th><th>Worst</th><th>Best</th><th>Σ</th></tr></thead><tbody>${rows}</tbody></table>`;
}

// -- scenario stats table ------------------------------------------------------------

/** Per-category dispersion summary for the last completed scenario. */
export function renderScenarioStats(scenario: ScenarioPayload): string {
  const categories = Object.keys(scenario.per_category).sort((a, b) =>
    a.localeCompare(b),
  );
  const rows = categories
    .map((category) => {
      const stats = scenario.per_category[category];
      return (
        `<tr data-cat="${escapeHtml(category)}">` +
        `<td class="left" data-field="category">${escapeHtml(category)}</td>` +
        numCell(category, "mean_aih", cell4(stats.mean_aih)) +
        numCell(category, "stddev", cell4(stats.stddev)) +
        numCell(category, "lo", cell4(stats.lo)) +
        numCell(category, "hi", cell4(stats.hi)) +
        numCell(category, "mean_ci", cell4(stats.mean_ci)) +
        numCell(category, "n_trials", String(stats.n_trials)) +
        `</tr>`
      );
    })
    .join("\n");
  return `<table class="stats-table"><thead><tr><th class="left">Category</th><th>mean AIH</th><th>σ</th><th>lo</th><th>hi</th><th>mean CI</th><th>trials</th></tr></thead><tbody>${rows}</tbody></table>`;
}

// -- status banner ----------------------------------------------------------------

/** Inline status strip: progress while work is in flight, errors loudly. */
export function renderStatus(status: Status): string {
  switch (status.phase) {
    case "idle":
      return '<div class="banner idle">ready</div>';
    case "loading":
      return `<div class="banner progress">${escapeHtml(status.message)}</div>`;
    case "reordering":
      return '<div class="banner progress">applying new severity ordering…</div>';
    case "scenario":
      return `<div class="banner progress">${escapeHtml(status.message)}</div>`;
    case "error": {
      const code = status.code ? ` <code>${escapeHtml(status.code)}</code>` : "";
      return `<div class="banner error" role="alert">${escapeHtml(status.message)}${code}</div>`;
    }
  }
}

// -- select options -----------------------------------------------------------------

export function renderOptions(values: readonly string[], selected: string | null): string {
  return values
    .map((value) => {
      const sel = value === selected ? " selected" : "";
      return `<option value="${escapeHtml(value)}"${sel}>${escapeHtml(value)}</option>`;
    })
    .join("");
}
