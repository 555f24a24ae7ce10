// Experiment submission and progress monitoring. Polls status once per
// second, backing off to five seconds after thirty; the clock is
// injectable so tests can run the schedule synchronously.

import type { ApiClient } from "./api.js";
import type { JobStatus } from "./types.js";

export type Sleep = (ms: number) => Promise<void>;

const realSleep: Sleep = (ms) => new Promise((resolve) => setTimeout(resolve, ms));

export interface MonitorEvents {
  onProgress(percentage: number, state: JobStatus["state"]): void;
  onDone(jobId: string): void;
  onFailed(message: string): void;
}

export async function monitorJob(
  api: ApiClient,
  jobId: string,
  events: MonitorEvents,
  sleep: Sleep = realSleep,
  maxPolls = 100_000,
): Promise<void> {
  let elapsedMs = 0;
  for (let i = 0; i < maxPolls; i++) {
    const status = await api.status(jobId);
    events.onProgress(status.percentage, status.state);
    if (status.state === "done") {
      events.onDone(jobId);
      return;
    }
    if (status.state === "failed") {
      events.onFailed(status.message ?? "experiment failed");
      return;
    }
    const interval = elapsedMs >= 30_000 ? 5_000 : 1_000;
    await sleep(interval);
    elapsedMs += interval;
  }
  events.onFailed("gave up polling");
}

export function renderProgress(): {
  element: HTMLElement;
  update(percentage: number, state: string): void;
} {
  const wrap = document.createElement("div");
  wrap.className = "progress";
  const bar = document.createElement("div");
  bar.className = "progress-bar";
  bar.setAttribute("role", "progressbar");
  const label = document.createElement("span");
  label.className = "progress-label";
  wrap.appendChild(bar);
  wrap.appendChild(label);
  let shown = 0;
  return {
    element: wrap,
    update(percentage: number, state: string) {
      shown = Math.max(shown, percentage); // never move backwards
      bar.style.width = `${shown}%`;
      bar.setAttribute("aria-valuenow", String(shown));
      label.textContent = `${state} ${shown}%`;
    },
  };
}
