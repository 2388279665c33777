/**
 * Typed client for the five service endpoints. Every response the UI
 * displays flows through here; the client never post-processes numbers.
 *
 * Failures become ApiError with the service's machine-readable code
 * (snapshot_not_found, invalid_ordering, validation_error, ...) or
 * "network_error" when no structured body came back.
 */

import type {
  ErrorBody,
  LorenzPayload,
  MetricsPayload,
  PendingJob,
  ScenarioPayload,
  ScenarioRequest,
  SnapshotList,
  SnapshotRequest,
} from "./types.js";

export class ApiError extends Error {
  readonly code: string;
  readonly status: number;
  readonly detail: unknown;

  constructor(code: string, message: string, status = 0, detail: unknown = undefined) {
    super(message);
    this.name = "ApiError";
    this.code = code;
    this.status = status;
    this.detail = detail;
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class Client {
  private readonly base: string;
  private readonly fetchFn: FetchLike;

  constructor(baseUrl = "", fetchFn?: FetchLike) {
    this.base = baseUrl.replace(/\/$/, "");
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  listSnapshots(): Promise<SnapshotList> {
    return this.request("GET", "/snapshots");
  }

  createSnapshot(body: SnapshotRequest): Promise<MetricsPayload> {
    return this.request("POST", "/snapshots", body);
  }

  getMetrics(snapshotId: string): Promise<MetricsPayload> {
    return this.request("GET", `/snapshots/${encodeURIComponent(snapshotId)}/metrics`);
  }

  /** Issue a severity reordering; resolves to the new snapshot's metrics. */
  reorder(snapshotId: string, ordering: string[]): Promise<MetricsPayload> {
    return this.request(
      "POST",
      `/snapshots/${encodeURIComponent(snapshotId)}/reorder`,
      { ordering },
    );
  }

  /** Run a scenario synchronously (service blocks until done). */
  runScenario(snapshotId: string, spec: ScenarioRequest): Promise<ScenarioPayload> {
    return this.request(
      "POST",
      `/snapshots/${encodeURIComponent(snapshotId)}/scenario`,
      { ...spec, wait: true },
    );
  }

  /** Submit a scenario job; resolves to a polling token. */
  startScenario(snapshotId: string, spec: ScenarioRequest): Promise<PendingJob> {
    return this.request(
      "POST",
      `/snapshots/${encodeURIComponent(snapshotId)}/scenario`,
      { ...spec, wait: false },
    );
  }

  pollScenario(snapshotId: string, job: string): Promise<ScenarioPayload | PendingJob> {
    const path =
      `/snapshots/${encodeURIComponent(snapshotId)}/scenario` +
      `?job=${encodeURIComponent(job)}`;
    return this.request("GET", path);
  }

  getLorenz(snapshotId: string, category: string): Promise<LorenzPayload> {
    const path =
      `/snapshots/${encodeURIComponent(snapshotId)}/lorenz/` +
      encodeURIComponent(category);
    return this.request("GET", path);
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(this.base + path, {
        method,
        headers: body === undefined ? undefined : { "Content-Type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new ApiError("network_error", `service unreachable: ${String(err)}`);
    }
    let parsed: unknown;
    try {
      parsed = await response.json();
    } catch {
      throw new ApiError(
        "network_error",
        `service returned a non-JSON body (status ${response.status})`,
        response.status,
      );
    }
    if (!response.ok) {
      const error = (parsed as ErrorBody)?.error;
      if (error && typeof error.code === "string") {
        throw new ApiError(error.code, error.message, response.status, error.detail);
      }
      throw new ApiError("network_error", `request failed (status ${response.status})`, response.status);
    }
    return parsed as T;
  }
}
