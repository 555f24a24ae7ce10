// Thin typed client for /api/v1. The fetch implementation is injectable so
// tests can script the server side; nothing here interprets constraint
// logic, it only moves documents.

import type { FeatureModelResponse, JobStatus, ResultDocument, ValidateResponse } from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export interface ConfigurationDocument {
  selected: string[];
  attributes: Record<string, Record<string, string>>;
}

export class ApiError extends Error {
  status: number;
  violations: string[];

  constructor(status: number, message: string, violations: string[] = []) {
    super(message);
    this.status = status;
    this.violations = violations;
  }
}

async function fail(response: Response): Promise<never> {
  let message = `${response.status}`;
  let violations: string[] = [];
  try {
    const body = await response.json();
    message = body.error ?? message;
    violations = body.violations ?? [];
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(response.status, message, violations);
}

export class ApiClient {
  private base: string;
  private fetchImpl: FetchLike;

  constructor(base = "", fetchImpl: FetchLike = (...args) => fetch(...args)) {
    this.base = base.replace(/\/$/, "");
    this.fetchImpl = fetchImpl;
  }

  private url(path: string): string {
    return `${this.base}/api/v1${path}`;
  }

  async featureModel(): Promise<FeatureModelResponse> {
    const r = await this.fetchImpl(this.url("/featuremodel"));
    if (!r.ok) return fail(r);
    return r.json();
  }

  async validate(config: ConfigurationDocument): Promise<ValidateResponse> {
    const r = await this.fetchImpl(this.url("/validate"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(config),
    });
    if (!r.ok) return fail(r);
    return r.json();
  }

  async generateManifest(config: ConfigurationDocument): Promise<string> {
    const r = await this.fetchImpl(this.url("/manifest"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(config),
    });
    if (!r.ok) return fail(r);
    return r.text();
  }

  async submitExperiment(manifestText: string, dataset: Blob): Promise<string> {
    const form = new FormData();
    // Blob is constructed here so it shares the page's realm with FormData
    form.append("manifest", new Blob([manifestText], { type: "application/toml" }),
                "experiment.toml");
    form.append("dataset", dataset, "dataset.csv");
    const r = await this.fetchImpl(this.url("/experiments"), { method: "POST", body: form });
    if (r.status !== 202) return fail(r);
    const body = await r.json();
    return body.id;
  }

  async status(jobId: string): Promise<JobStatus> {
    const r = await this.fetchImpl(this.url(`/experiments/${jobId}/status`));
    if (!r.ok) return fail(r);
    return r.json();
  }

  async result(jobId: string): Promise<{ state: string; result?: ResultDocument; message?: string }> {
    const r = await this.fetchImpl(this.url(`/experiments/${jobId}/result`));
    if (!r.ok) return fail(r);
    return r.json();
  }

  async reportCsv(jobId: string): Promise<string> {
    const r = await this.fetchImpl(this.url(`/experiments/${jobId}/report.csv`));
    if (!r.ok) return fail(r);
    return r.text();
  }

  reportUrl(jobId: string): string {
    return this.url(`/experiments/${jobId}/report.csv`);
  }

  modelUrl(jobId: string): string {
    return this.url(`/experiments/${jobId}/model`);
  }
}
