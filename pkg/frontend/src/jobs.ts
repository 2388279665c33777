/**
 * Request discipline: reorders run strictly one after another, and at most
 * one scenario job is in flight at any time. Scenario jobs are submitted
 * asynchronously and polled so the UI can show progress and enforce a
 * timeout instead of hanging on a long computation.
 */

import type { Client } from "./api.js";
import type { PendingJob, ScenarioPayload, ScenarioRequest } from "./types.js";

/** Chains submitted tasks so each starts only after the previous settled. */
export class SerialQueue {
  private tail: Promise<unknown> = Promise.resolve();

  run<T>(task: () => Promise<T>): Promise<T> {
    const result = this.tail.then(task, task);
    // Keep the chain alive whether or not the task failed; the caller
    // still sees the rejection through `result`.
    this.tail = result.catch(() => undefined);
    return result;
  }
}

export interface ScenarioProgress {
  job: string;
  elapsedMs: number;
}

export interface ScenarioRunOptions {
  onProgress?: (progress: ScenarioProgress) => void;
  pollIntervalMs?: number;
  timeoutMs?: number;
}

type Sleep = (ms: number) => Promise<void>;

const realSleep: Sleep = (ms) => new Promise((resolve) => setTimeout(resolve, ms));

/**
 * Runs one scenario at a time against the service: submit with wait=false,
 * poll until done, reject on timeout. A second `run` while one is active
 * rejects immediately with code "busy".
 */
export class ScenarioRunner {
  private active = false;
  private readonly client: Client;
  private readonly sleep: Sleep;
  private readonly now: () => number;

  constructor(client: Client, sleep: Sleep = realSleep, now: () => number = Date.now) {
    this.client = client;
    this.sleep = sleep;
    this.now = now;
  }

  get busy(): boolean {
    return this.active;
  }

  async run(
    snapshotId: string,
    spec: ScenarioRequest,
    options: ScenarioRunOptions = {},
  ): Promise<ScenarioPayload> {
    if (this.active) {
      throw new Error("a scenario is already running; wait for it to finish");
    }
    this.active = true;
    try {
      const interval = options.pollIntervalMs ?? 250;
      const timeout = options.timeoutMs ?? 120_000;
      const started = this.now();
      const pending = await this.client.startScenario(snapshotId, spec);
      for (;;) {
        const elapsedMs = this.now() - started;
        if (elapsedMs > timeout) {
          throw new Error(
            `scenario timed out after ${(timeout / 1000).toFixed(0)}s (job ${pending.job})`,
          );
        }
        options.onProgress?.({ job: pending.job, elapsedMs });
        const polled = await this.client.pollScenario(snapshotId, pending.job);
        if (isDone(polled)) return polled;
        await this.sleep(interval);
      }
    } finally {
      this.active = false;
    }
  }
}

function isDone(payload: ScenarioPayload | PendingJob): payload is ScenarioPayload {
  return payload.status === "done";
}
