/**
 * Wire types for the harmrank service. These mirror the JSON bodies the
 * service emits, field for field; every float arrives already rounded to
 * 4 decimals so the UI can display it verbatim. Fields that can be NaN on
 * the server (degenerate categories, zero-variance correlations) arrive
 * as null.
 */

export interface PolylinePayload {
  x: (number | null)[];
  y: (number | null)[];
}

export interface CategoryRow {
  category: string;
  aih: number | null;
  ci: number | null;
  gini: number | null;
  mean_rank: number | null;
  m: number;
  rank: number;
  best_aih?: number | null;
  worst_aih?: number | null;
  lorenz_derivative?: PolylinePayload;
  lorenz_classic?: PolylinePayload;
}

/** Response of snapshot creation, reorder, and the metrics endpoint. */
export interface MetricsPayload {
  id: string;
  ci_convention: string;
  categories: CategoryRow[];
  units?: string[];
  m?: number;
  degenerate?: string[];
  unmapped?: Record<string, number>;
}

export interface SnapshotList {
  snapshots: string[];
  capacity: number;
}

export interface ScenarioSpecPayload {
  kind: string;
  base_seed: number;
  k_swaps?: number;
  removal_fraction?: number;
  trials?: number;
}

export interface CategoryStatsPayload {
  mean_aih: number | null;
  stddev: number | null;
  lo: number | null;
  hi: number | null;
  mean_ci: number | null;
  n_trials: number;
}

export interface ScenarioPayload {
  spec: ScenarioSpecPayload;
  per_category: Record<string, CategoryStatsPayload>;
  correlation_labels: string[];
  rank_correlations: (number | null)[][];
  snapshot: string;
  job?: string;
  status?: string;
}

/** 202 response when a scenario is submitted with wait=false, and the
 *  poll response while the job is still running. */
export interface PendingJob {
  job: string;
  status: "pending";
  snapshot: string;
}

export interface LorenzPayload {
  snapshot: string;
  category: string;
  derivative: PolylinePayload;
  classic: PolylinePayload;
}

export interface ErrorBody {
  error: {
    code: string;
    message: string;
    detail?: unknown;
  };
}

// -- request bodies ---------------------------------------------------------

export interface AnnotationIn {
  category: string;
  unit: string;
  weight?: number;
  subcategory?: string | null;
}

export interface SnapshotRequest {
  annotations?: AnnotationIn[];
  severity_order?: string[];
  benchmark?: boolean;
  granularity?: string;
  ci_convention?: string;
}

export type ScenarioKind = "boundary" | "permutation" | "removal";

export interface ScenarioRequest {
  kind: ScenarioKind;
  k_swaps?: number;
  removal_fraction?: number;
  trials?: number;
  base_seed?: number;
  wait?: boolean;
}
