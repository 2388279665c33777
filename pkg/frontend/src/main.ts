/**
 * Browser wiring. Everything here is glue: DOM events in, service calls
 * out, render-module strings back into the document. State changes go
 * through the pure transitions in state.ts; displayed numbers come from
 * service payloads untouched.
 */

import { ApiError, Client } from "./api.js";
import { ScenarioRunner, SerialQueue } from "./jobs.js";
import {
  applyMetrics,
  applyScenario,
  initialState,
  moveItem,
} from "./state.js";
import type { ViewState } from "./state.js";
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
} from "./render.js";
import type { AnnotationIn, ScenarioRequest } from "./types.js";

const REMOVAL_SWEEP = [0, 0.1, 0.2, 0.5, 0.8];
const PERMUTATION_SWEEP = [1, 2, 5];

let state: ViewState = initialState();
let client = new Client("http://127.0.0.1:8765");
const reorders = new SerialQueue();
let runner = new ScenarioRunner(client);

function $<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

function setState(next: ViewState): void {
  state = next;
  paint();
}

function fail(err: unknown): void {
  const message = err instanceof Error ? err.message : String(err);
  const code = err instanceof ApiError ? err.code : undefined;
  setState({ ...state, status: { phase: "error", message, code } });
}

// -- painting -----------------------------------------------------------------

function paint(): void {
  $("status").innerHTML = renderStatus(state.status);
  $("severity-list").innerHTML = renderSeverityList(state.ordering);
  $("ranking").innerHTML = state.metrics
    ? renderRankingTable(state.metrics, state.previousMetrics, state.selectedCategory)
    : '<p class="hint">create or load a snapshot to see rankings</p>';
  const categories = state.metrics?.categories.map((row) => row.category) ?? [];
  $("category-select").innerHTML = renderOptions(categories, state.selectedCategory);
  $("trend").innerHTML = renderTrendChart(state.sweep, state.selectedCategory);
  if (state.scenario) {
    $("rho").innerHTML = renderRhoGrid(state.scenario);
    $("stats").innerHTML = renderScenarioStats(state.scenario);
    $("boundary").innerHTML =
      state.scenario.spec.kind === "boundary"
        ? renderBoundaryPanel(state.scenario)
        : '<p class="hint">run a boundary scenario for best/worst bounds</p>';
  } else {
    $("rho").innerHTML = "";
    $("stats").innerHTML = "";
    $("boundary").innerHTML = '<p class="hint">no scenario yet</p>';
  }
  const busy = runner.busy;
  ($("run-scenario") as HTMLButtonElement).disabled = busy || !state.snapshotId;
  ($("run-sweep") as HTMLButtonElement).disabled = busy || !state.snapshotId;
  const snapshotLabel = state.snapshotId ?? "none";
  $("snapshot-label").textContent = snapshotLabel;
}

async function updateLorenz(): Promise<void> {
  const panel = $("lorenz");
  if (!state.snapshotId || !state.selectedCategory) {
    panel.innerHTML = "";
    return;
  }
  try {
    const curves = await client.getLorenz(state.snapshotId, state.selectedCategory);
    panel.innerHTML = renderLorenzOverlay(curves);
  } catch (err) {
    // Fall back to the curves embedded in the metrics payload, if present.
    const row = state.metrics?.categories.find(
      (r) => r.category === state.selectedCategory,
    );
    if (row?.lorenz_derivative) {
      panel.innerHTML = renderLorenzOverlay({
        category: row.category,
        derivative: row.lorenz_derivative,
        classic: row.lorenz_classic,
      });
    } else {
      fail(err);
    }
  }
}

// -- snapshot loading -----------------------------------------------------------

async function refreshSnapshotList(): Promise<string[]> {
  const listing = await client.listSnapshots();
  $("snapshot-select").innerHTML = renderOptions(
    listing.snapshots,
    state.snapshotId,
  );
  return listing.snapshots;
}

async function loadSnapshot(id: string): Promise<void> {
  setState({ ...state, status: { phase: "loading", message: `loading ${id}…` } });
  try {
    const payload = await client.getMetrics(id);
    setState(applyMetrics(state, payload));
    await refreshSnapshotList();
    await updateLorenz();
  } catch (err) {
    fail(err);
  }
}

async function connect(): Promise<void> {
  const base = ($("base-url") as HTMLInputElement).value.trim();
  client = new Client(base);
  runner = new ScenarioRunner(client);
  setState({ ...state, status: { phase: "loading", message: `connecting to ${base}…` } });
  try {
    const ids = await refreshSnapshotList();
    if (ids.length > 0) {
      await loadSnapshot(ids[ids.length - 1]);
    } else {
      setState({ ...state, status: { phase: "idle" } });
    }
  } catch (err) {
    fail(err);
  }
}

async function loadBenchmark(): Promise<void> {
  setState({ ...state, status: { phase: "loading", message: "building benchmark snapshot…" } });
  try {
    const payload = await client.createSnapshot({ benchmark: true });
    setState(applyMetrics(state, payload));
    await refreshSnapshotList();
    await updateLorenz();
  } catch (err) {
    fail(err);
  }
}

/** File selection: a JSON array of {category, unit, weight?} rows. */
async function loadFile(file: File): Promise<void> {
  setState({ ...state, status: { phase: "loading", message: `reading ${file.name}…` } });
  try {
    const text = await file.text();
    const rows = JSON.parse(text) as AnnotationIn[];
    if (!Array.isArray(rows)) {
      throw new Error("annotation file must be a JSON array of {category, unit, weight} rows");
    }
    const payload = await client.createSnapshot({ annotations: rows });
    setState(applyMetrics(state, payload));
    await refreshSnapshotList();
    await updateLorenz();
  } catch (err) {
    fail(err);
  }
}

// -- reordering -----------------------------------------------------------------

/**
 * Drop handler: compute the proposed permutation and send it. Reorders
 * are serialized; the service's reply (not the gesture) becomes the new
 * displayed state. An identity drop still round-trips, re-rendering the
 * same values under a fresh snapshot id.
 */
function requestReorder(from: number, to: number): void {
  const snapshotId = state.snapshotId;
  if (!snapshotId) return;
  const proposed = moveItem(state.ordering, from, to);
  setState({ ...state, status: { phase: "reordering" } });
  void reorders
    .run(() => client.reorder(snapshotId, proposed))
    .then(async (payload) => {
      setState(applyMetrics(state, payload));
      await refreshSnapshotList();
      await updateLorenz();
    })
    .catch((err) => {
      // The severity list re-renders from unchanged state.ordering, so a
      // rejected permutation visually snaps back.
      fail(err);
    });
}

let dragFrom: number | null = null;

function wireDragAndDrop(list: HTMLElement): void {
  list.addEventListener("dragstart", (event) => {
    const item = (event.target as HTMLElement).closest("li");
    if (!item) return;
    dragFrom = Number(item.dataset.index);
    event.dataTransfer?.setData("text/plain", item.dataset.unit ?? "");
  });
  list.addEventListener("dragover", (event) => {
    event.preventDefault();
    const item = (event.target as HTMLElement).closest("li");
    list.querySelectorAll("li").forEach((li) => li.classList.remove("drop-target"));
    item?.classList.add("drop-target");
  });
  list.addEventListener("dragleave", () => {
    list.querySelectorAll("li").forEach((li) => li.classList.remove("drop-target"));
  });
  list.addEventListener("drop", (event) => {
    event.preventDefault();
    const item = (event.target as HTMLElement).closest("li");
    list.querySelectorAll("li").forEach((li) => li.classList.remove("drop-target"));
    if (!item || dragFrom === null) return;
    const to = Number(item.dataset.index);
    const from = dragFrom;
    dragFrom = null;
    requestReorder(from, to);
  });
}

// -- scenarios ------------------------------------------------------------------

function specFromControls(): ScenarioRequest {
  const kind = ($("scenario-kind") as HTMLSelectElement).value as ScenarioRequest["kind"];
  const spec: ScenarioRequest = {
    kind,
    base_seed: Number(($("base-seed") as HTMLInputElement).value) || 0,
  };
  if (kind === "permutation") {
    spec.k_swaps = Number(($("k-swaps") as HTMLInputElement).value) || 1;
    spec.trials = Number(($("trials") as HTMLInputElement).value) || 20;
  }
  if (kind === "removal") {
    spec.removal_fraction = Number(($("removal-fraction") as HTMLInputElement).value) || 0;
    spec.trials = Number(($("trials") as HTMLInputElement).value) || 20;
  }
  return spec;
}

async function runOne(spec: ScenarioRequest): Promise<void> {
  const snapshotId = state.snapshotId;
  if (!snapshotId) return;
  const describe =
    spec.kind === "removal"
      ? `removal f=${spec.removal_fraction}`
      : spec.kind === "permutation"
        ? `permutation k=${spec.k_swaps}`
        : "boundary";
  const payload = await runner.run(snapshotId, spec, {
    onProgress: ({ job, elapsedMs }) => {
      const seconds = (elapsedMs / 1000).toFixed(1);
      setState({
        ...state,
        status: { phase: "scenario", message: `${describe} running (${job}, ${seconds}s)…` },
      });
    },
    timeoutMs: 120_000,
  });
  setState(applyScenario(state, payload));
}

function runScenarioClicked(): void {
  runOne(specFromControls()).catch(fail);
}

/** Sequentially run the whole fraction/k grid for the trend chart. */
async function runSweep(): Promise<void> {
  const spec = specFromControls();
  if (spec.kind === "boundary") {
    await runOne(spec);
    return;
  }
  const grid = spec.kind === "removal" ? REMOVAL_SWEEP : PERMUTATION_SWEEP;
  for (let i = 0; i < grid.length; i++) {
    const step: ScenarioRequest = { ...spec };
    if (spec.kind === "removal") step.removal_fraction = grid[i];
    else step.k_swaps = grid[i];
    setState({
      ...state,
      status: {
        phase: "scenario",
        message: `sweep ${i + 1}/${grid.length}: ${spec.kind} @ ${grid[i]}…`,
      },
    });
    await runOne(step);
  }
}

function runSweepClicked(): void {
  runSweep().catch(fail);
}

// -- init -------------------------------------------------------------------------

function init(): void {
  paint();
  wireDragAndDrop($("severity-list"));
  $("connect").addEventListener("click", () => void connect());
  $("load-benchmark").addEventListener("click", () => void loadBenchmark());
  $("file-input").addEventListener("change", (event) => {
    const input = event.target as HTMLInputElement;
    const file = input.files?.[0];
    if (file) void loadFile(file);
    input.value = "";
  });
  $("snapshot-select").addEventListener("change", (event) => {
    void loadSnapshot((event.target as HTMLSelectElement).value);
  });
  $("category-select").addEventListener("change", (event) => {
    state = { ...state, selectedCategory: (event.target as HTMLSelectElement).value };
    paint();
    void updateLorenz();
  });
  $("scenario-kind").addEventListener("change", () => paint());
  $("run-scenario").addEventListener("click", runScenarioClicked);
  $("run-sweep").addEventListener("click", runSweepClicked);
}

if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", init);
}
