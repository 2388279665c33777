/**
 * View state and its pure transitions.
 *
 * The state holds the last payloads the service sent; everything the UI
 * displays is read from those payloads. The transitions here rearrange
 * lists and track which payload is current — they never derive a metric.
 * The one arithmetic the view performs is differencing two payload fields
 * (the delta column after a reorder), which the service contract treats as
 * display fidelity, not computation.
 */

import type { MetricsPayload, ScenarioKind, ScenarioPayload } from "./types.js";

export interface ScenarioControls {
  kind: ScenarioKind;
  kSwaps: number;
  removalFraction: number;
  trials: number;
  baseSeed: number;
}

export type Status =
  | { phase: "idle" }
  | { phase: "loading"; message: string }
  | { phase: "reordering" }
  | { phase: "scenario"; message: string }
  | { phase: "error"; message: string; code?: string };

/** One completed scenario run, keyed for the trend chart's x axis. */
export interface SweepPoint {
  /** Numeric x position: removal fraction, or k for permutation sweeps. */
  at: number;
  label: string;
  payload: ScenarioPayload;
}

export interface ViewState {
  snapshotId: string | null;
  /** Severity units, least to most severe; the draggable list. */
  ordering: string[];
  selectedCategory: string | null;
  controls: ScenarioControls;
  /** Most recent metrics payload — the single source of displayed numbers. */
  metrics: MetricsPayload | null;
  /** Payload that was current before the last reorder (delta column). */
  previousMetrics: MetricsPayload | null;
  /** Most recent completed scenario payload (ρ grid, boundary panel). */
  scenario: ScenarioPayload | null;
  /** Completed runs of the active kind, one per fraction/k (trend chart). */
  sweep: SweepPoint[];
  status: Status;
}

export function initialState(): ViewState {
  return {
    snapshotId: null,
    ordering: [],
    selectedCategory: null,
    controls: {
      kind: "boundary",
      kSwaps: 1,
      removalFraction: 0.1,
      trials: 20,
      baseSeed: 0,
    },
    metrics: null,
    previousMetrics: null,
    scenario: null,
    sweep: [],
    status: { phase: "idle" },
  };
}

/**
 * Reorder a list by drag-and-drop: the element at `from` ends up at
 * position `to` of the returned list. Out-of-range indices and identity
 * moves return the list unchanged.
 */
export function moveItem<T>(list: readonly T[], from: number, to: number): T[] {
  const result = [...list];
  if (from === to) return result;
  if (from < 0 || from >= list.length || to < 0 || to >= list.length) return result;
  const [item] = result.splice(from, 1);
  result.splice(to, 0, item);
  return result;
}

/**
 * Install a metrics payload as the current truth. The payload's own unit
 * list becomes the ordering (the service, not the drag gesture, decides
 * what the new state is). Scenario results belong to the snapshot they
 * were run against, so a new snapshot id clears them.
 */
export function applyMetrics(state: ViewState, payload: MetricsPayload): ViewState {
  const sameSnapshot = state.snapshotId === payload.id;
  const categories = payload.categories.map((row) => row.category);
  const selected =
    state.selectedCategory && categories.includes(state.selectedCategory)
      ? state.selectedCategory
      : (categories[0] ?? null);
  return {
    ...state,
    snapshotId: payload.id,
    ordering: payload.units ? [...payload.units] : state.ordering,
    selectedCategory: selected,
    metrics: payload,
    previousMetrics: state.metrics,
    scenario: sameSnapshot ? state.scenario : null,
    sweep: sameSnapshot ? state.sweep : [],
    status: { phase: "idle" },
  };
}

/** Numeric x position of a scenario run on the trend chart. */
export function sweepPosition(payload: ScenarioPayload): SweepPoint {
  const spec = payload.spec;
  if (spec.kind === "removal") {
    const fraction = spec.removal_fraction ?? 0;
    return { at: fraction, label: fraction.toString(), payload };
  }
  if (spec.kind === "permutation") {
    const k = spec.k_swaps ?? 0;
    return { at: k, label: `k=${k}`, payload };
  }
  return { at: 0, label: spec.kind, payload };
}

/**
 * Record a completed scenario. Boundary runs only replace the active
 * payload; permutation/removal runs also join the sweep for their kind
 * (replacing a previous run at the same fraction/k). Changing kind
 * restarts the sweep.
 */
export function applyScenario(state: ViewState, payload: ScenarioPayload): ViewState {
  let sweep = state.sweep;
  if (payload.spec.kind !== "boundary") {
    const point = sweepPosition(payload);
    const previousKind = state.sweep[0]?.payload.spec.kind;
    const kept =
      previousKind === payload.spec.kind
        ? state.sweep.filter((p) => p.at !== point.at)
        : [];
    sweep = [...kept, point].sort((a, b) => a.at - b.at);
  }
  return { ...state, scenario: payload, sweep, status: { phase: "idle" } };
}

export interface AihDelta {
  category: string;
  before: number | null;
  after: number | null;
  /** after − before, both straight from service payloads. */
  delta: number | null;
}

/**
 * Per-category AIH movement between two metrics payloads (e.g. across a
 * reorder). Categories are matched by name; a category missing on either
 * side yields a null delta.
 */
export function aihDeltas(
  previous: MetricsPayload | null,
  current: MetricsPayload,
): Map<string, AihDelta> {
  const before = new Map<string, number | null>();
  for (const row of previous?.categories ?? []) before.set(row.category, row.aih);
  const deltas = new Map<string, AihDelta>();
  for (const row of current.categories) {
    const prev = before.has(row.category) ? (before.get(row.category) ?? null) : null;
    const delta = prev === null || row.aih === null ? null : row.aih - prev;
    deltas.set(row.category, {
      category: row.category,
      before: prev,
      after: row.aih,
      delta,
    });
  }
  return deltas;
}
