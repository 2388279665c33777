/**
 * Display-fidelity suite. The contract under test: every number shown in
 * the UI is exactly the corresponding service payload field — the view
 * adds presentation (fixed-decimal text, colours, coordinates) and
 * nothing numerical.
 */

import { describe, expect, it } from "vitest";

import { NA, cell2, cell4, signed4 } from "../src/format.js";
import {
  renderBoundaryPanel,
  renderLorenzOverlay,
  renderOptions,
  renderRankingTable,
  renderRhoGrid,
  renderScenarioStats,
  renderSeverityList,
  renderStatus,
  renderTrendChart,
} from "../src/render.js";
import { applyMetrics, applyScenario, initialState } from "../src/state.js";
import type {
  LorenzPayload,
  MetricsPayload,
  ScenarioPayload,
} from "../src/types.js";
import {
  extractCells,
  extractGridTexts,
  extractGridTitles,
  extractTrendPoints,
  fixture,
} from "./helpers.js";

const benchmark = fixture<MetricsPayload>("metrics_benchmark");
const adjacentSwap = fixture<MetricsPayload>("reorder_adjacent_swap");
const reversal = fixture<MetricsPayload>("reorder_reversal");
const small = fixture<MetricsPayload>("metrics_small");
const smallSwap = fixture<MetricsPayload>("reorder_small_swap");
const boundary = fixture<ScenarioPayload>("scenario_boundary");
const removal0 = fixture<ScenarioPayload>("scenario_removal_f0");
const removal01 = fixture<ScenarioPayload>("scenario_removal_f01");
const permutation = fixture<ScenarioPayload>("scenario_permutation_k1");
const lorenzTop = fixture<LorenzPayload>("lorenz_top");

describe("formatting is lossless for service floats", () => {
  it("round-trips 4-decimal payload values", () => {
    for (const value of [0.8492, 0.75, 0.7, 0.0474, 0.0, 1.0, 0.1508]) {
      expect(Number(cell4(value))).toBe(value);
    }
  });

  it("renders missing values as NA", () => {
    expect(cell4(null)).toBe(NA);
    expect(cell2(undefined)).toBe(NA);
    expect(signed4(Number.NaN)).toBe(NA);
  });

  it("writes explicit signs on deltas", () => {
    expect(signed4(0.1)).toBe("+0.1000");
    expect(signed4(-0.4)).toBe("-0.4000");
    expect(signed4(0)).toBe("0.0000");
  });
});

describe("ranking table fidelity", () => {
  const payloads: [string, MetricsPayload][] = [
    ["baseline", benchmark],
    ["after adjacent swap", adjacentSwap],
    ["after reversal", reversal],
    ["two-unit snapshot", small],
  ];

  for (const [label, payload] of payloads) {
    it(`displays every AIH and CI verbatim (${label})`, () => {
      const html = renderRankingTable(payload);
      const aihCells = extractCells(html, "aih");
      const ciCells = extractCells(html, "ci");
      expect(aihCells.size).toBe(payload.categories.length);
      for (const row of payload.categories) {
        const aihText = aihCells.get(row.category)!;
        const ciText = ciCells.get(row.category)!;
        expect(aihText).toBe(row.aih!.toFixed(4));
        expect(ciText).toBe(row.ci!.toFixed(4));
        // Parsing the display text recovers the payload double exactly.
        expect(Number(aihText)).toBe(row.aih);
        expect(Number(ciText)).toBe(row.ci);
      }
    });
  }

  it("shows ranks, bounds, and names straight from the payload", () => {
    const html = renderRankingTable(benchmark);
    const ranks = extractCells(html, "rank");
    const best = extractCells(html, "best_aih");
    const worst = extractCells(html, "worst_aih");
    for (const row of benchmark.categories) {
      expect(ranks.get(row.category)).toBe(String(row.rank));
      expect(Number(best.get(row.category))).toBe(row.best_aih);
      expect(Number(worst.get(row.category))).toBe(row.worst_aih);
    }
  });

  it("orders rows by service rank, top first", () => {
    const html = renderRankingTable(benchmark);
    const order = [...extractCells(html, "aih").keys()];
    expect(order[0]).toBe("Political & economic");
    expect(order[order.length - 1]).toBe("Financial & business");
  });
});

describe("delta column after a reorder", () => {
  it("shows the exact difference of the two payloads (two-unit case)", () => {
    const html = renderRankingTable(smallSwap, small);
    const deltas = extractCells(html, "aih_delta");
    expect(deltas.get("alpha")).toBe("+0.1000");
    expect(deltas.get("beta")).toBe("-0.4000");
  });

  it("satisfies the adjacent-swap law: |Δ| = |f_r − f_{r+1}| / M", () => {
    // Ranks 4 and 5 were swapped (0-based units 3 and 4). Unit shares
    // come from the baseline payload's cumulative derivative curve.
    const html = renderRankingTable(adjacentSwap, benchmark);
    const deltas = extractCells(html, "aih_delta");
    for (const row of benchmark.categories) {
      const x = row.lorenz_derivative!.x;
      const f4 = x[4]! - x[3]!;
      const f5 = x[5]! - x[4]!;
      const law = (f4 - f5) / row.m;
      const displayed = Number(deltas.get(row.category)!.replace("+", ""));
      expect(Number.isNaN(displayed)).toBe(false);
      // Both sides carry 4-decimal rounding from the service; the law
      // holds to well under one display unit.
      expect(Math.abs(displayed - law)).toBeLessThan(5e-4);
    }
  });

  it("swap deltas equal the payload difference exactly", () => {
    const html = renderRankingTable(adjacentSwap, benchmark);
    const deltas = extractCells(html, "aih_delta");
    for (const row of adjacentSwap.categories) {
      const before = benchmark.categories.find((r) => r.category === row.category)!;
      expect(deltas.get(row.category)).toBe(signed4(row.aih! - before.aih!));
    }
  });

  it("renders an all-zero delta column on an identity reorder", () => {
    const identity = fixture<MetricsPayload>("reorder_identity");
    const html = renderRankingTable(identity, benchmark);
    for (const text of extractCells(html, "aih_delta").values()) {
      expect(text).toBe("0.0000");
    }
  });
});

describe("boundary panel", () => {
  it("renders best and worst verbatim and their sum as 1.00 on every row", () => {
    const html = renderBoundaryPanel(boundary);
    const worst = extractCells(html, "worst");
    const best = extractCells(html, "best");
    const sums = extractCells(html, "sum");
    const categories = Object.keys(boundary.per_category);
    expect(sums.size).toBe(categories.length);
    for (const category of categories) {
      const stats = boundary.per_category[category];
      expect(Number(worst.get(category))).toBe(stats.lo);
      expect(Number(best.get(category))).toBe(stats.hi);
      expect(sums.get(category)).toBe("1.00");
    }
  });

  it("shows the baseline AIH column equal to the metrics payload", () => {
    const html = renderBoundaryPanel(boundary);
    const baselineCells = extractCells(html, "baseline_aih");
    for (const row of benchmark.categories) {
      expect(Number(baselineCells.get(row.category))).toBe(row.aih);
    }
  });
});

describe("rank-correlation grid", () => {
  it("renders the diagonal as 1.00 on a small grid", () => {
    const svg = renderRhoGrid(removal0);
    const texts = extractGridTexts(svg);
    const n = removal0.correlation_labels.length;
    expect(n).toBe(6);
    for (let i = 0; i < n; i++) {
      expect(texts.get(`${i},${i}`)).toBe("1.00");
    }
  });

  it("keeps every cell value available in tooltips on large grids", () => {
    const svg = renderRhoGrid(permutation);
    const titles = extractGridTitles(svg);
    const n = permutation.correlation_labels.length;
    expect(n).toBe(21);
    expect(extractGridTexts(svg).size).toBe(0); // too dense for inline text
    for (let i = 0; i < n; i++) {
      const title = titles.get(`${i},${i}`)!;
      expect(title).toContain("= 1.0000");
    }
    // Spot-check an off-diagonal entry against the payload.
    const value = permutation.rank_correlations[0][1];
    expect(titles.get("0,1")).toContain(cell4(value));
  });

  it("names the trials in the axis labels", () => {
    const svg = renderRhoGrid(removal0);
    expect(svg).toContain("baseline");
    expect(svg).toContain("trial_1");
  });
});

describe("scenario trend chart", () => {
  function sweepOf(...payloads: ScenarioPayload[]) {
    let state = applyMetrics(initialState(), benchmark);
    for (const payload of payloads) state = applyScenario(state, payload);
    return state.sweep;
  }

  it("plots fraction 0 at exactly the baseline AIH for every category", () => {
    const sweep = sweepOf(removal0);
    for (const row of benchmark.categories) {
      const svg = renderTrendChart(sweep, row.category);
      const points = extractTrendPoints(svg);
      expect(points).toHaveLength(1);
      expect(points[0].at).toBe("0");
      expect(points[0].value).toBe(cell4(row.aih));
      expect(Number(points[0].value)).toBe(row.aih);
    }
  });

  it("plots each sweep point at its own payload mean", () => {
    const sweep = sweepOf(removal0, removal01);
    const svg = renderTrendChart(sweep, "Political & economic");
    const points = extractTrendPoints(svg);
    expect(points.map((p) => p.at)).toEqual(["0", "0.1"]);
    expect(points[0].value).toBe(
      cell4(removal0.per_category["Political & economic"].mean_aih),
    );
    expect(points[1].value).toBe(
      cell4(removal01.per_category["Political & economic"].mean_aih),
    );
  });

  it("prompts for a sweep when empty", () => {
    expect(renderTrendChart([], "Physical")).toContain("run a permutation or removal sweep");
  });
});

describe("scenario stats table", () => {
  it("displays every per-category field verbatim", () => {
    const html = renderScenarioStats(permutation);
    const means = extractCells(html, "mean_aih");
    const stds = extractCells(html, "stddev");
    const trials = extractCells(html, "n_trials");
    for (const [category, stats] of Object.entries(permutation.per_category)) {
      expect(Number(means.get(category))).toBe(stats.mean_aih);
      expect(Number(stds.get(category))).toBe(stats.stddev);
      expect(trials.get(category)).toBe(String(stats.n_trials));
    }
  });
});

describe("lorenz overlay", () => {
  it("draws both curve constructions from the payload", () => {
    const svg = renderLorenzOverlay(lorenzTop);
    expect(svg).toContain('data-curve="derivative"');
    expect(svg).toContain('data-curve="classic"');
    expect(svg).toContain("Political &amp; economic");
  });

  it("anchors the polylines at the payload's (0,0) and (1,1)", () => {
    const svg = renderLorenzOverlay(lorenzTop);
    const match = svg.match(/data-curve="derivative" points="([^"]*)"/)!;
    const points = match[1].split(" ");
    expect(points[0]).toBe("34.00,246.00"); // sx(0), sy(0)
    expect(points[points.length - 1]).toBe("326.00,34.00"); // sx(1), sy(1)
    expect(points).toHaveLength(lorenzTop.derivative.x.length);
  });

  it("omits the classic curve when absent", () => {
    const svg = renderLorenzOverlay({
      category: "alpha",
      derivative: { x: [0, 1], y: [0, 1] },
    });
    expect(svg).not.toContain('data-curve="classic"');
  });
});

describe("chrome", () => {
  it("renders the severity list draggable, in order, escaped", () => {
    const html = renderSeverityList(["low", "A & B", "high"]);
    const items = [...html.matchAll(/data-unit="([^"]*)"/g)].map((m) => m[1]);
    expect(items).toEqual(["low", "A &amp; B", "high"]);
    expect(html.match(/draggable="true"/g)).toHaveLength(3);
  });

  it("renders select options with the active selection", () => {
    const html = renderOptions(["a", "b"], "b");
    expect(html).toBe('<option value="a">a</option><option value="b" selected>b</option>');
  });

  it("announces errors loudly with the service code", () => {
    const html = renderStatus({
      phase: "error",
      message: "ordering must be a permutation of the snapshot's units",
      code: "invalid_ordering",
    });
    expect(html).toContain('role="alert"');
    expect(html).toContain("invalid_ordering");
    expect(html).toContain("must be a permutation");
  });

  it("renders progress and idle states", () => {
    expect(renderStatus({ phase: "scenario", message: "removal f=0.1 running (job-000003, 1.2s)…" }))
      .toContain("job-000003");
    expect(renderStatus({ phase: "reordering" })).toContain("applying new severity ordering");
    expect(renderStatus({ phase: "idle" })).toContain("ready");
  });
});
