// Form state. The client keeps only the user's raw choices; every
// enabled/disabled flag, reason string, and the "is this runnable" verdict
// come verbatim from the latest POST /validate response. Responses carry a
// sequence number so a slow stale reply can never overwrite a newer one.

import type { ConfigurationDocument } from "./api.js";
import type { FeatureStatus, ValidateResponse } from "./types.js";

export interface FieldState {
  status: FeatureStatus;
  reason?: string;
}

export class FormState {
  selected = new Set<string>();
  attributes = new Map<string, Map<string, string>>();
  fields: Record<string, FieldState> = {};
  valid = false;
  violations: string[] = [];
  datasetFile: File | null = null;
  private seq = 0;
  private applied = 0;

  toggle(featureId: string, on: boolean): void {
    if (on) this.selected.add(featureId);
    else this.selected.delete(featureId);
  }

  /** Exclusive selection within an alternative group. */
  choose(featureId: string, siblings: string[]): void {
    for (const s of siblings) this.selected.delete(s);
    this.selected.add(featureId);
  }

  setAttribute(owner: string, name: string, value: string): void {
    if (!this.attributes.has(owner)) this.attributes.set(owner, new Map());
    const entry = this.attributes.get(owner)!;
    if (value === "") entry.delete(name);
    else entry.set(name, value);
  }

  attribute(owner: string, name: string): string {
    return this.attributes.get(owner)?.get(name) ?? "";
  }

  clear(): void {
    this.selected.clear();
    this.attributes.clear();
  }

  configuration(): ConfigurationDocument {
    const attributes: Record<string, Record<string, string>> = {};
    for (const [owner, entries] of this.attributes) {
      if (entries.size === 0) continue;
      attributes[owner] = Object.fromEntries(entries);
    }
    return { selected: [...this.selected].sort(), attributes };
  }

  /** Sequence number to attach to the next /validate request. */
  nextSeq(): number {
    return ++this.seq;
  }

  /** Apply a /validate response; returns false when it was stale. */
  applyValidation(response: ValidateResponse, seq: number): boolean {
    if (seq < this.applied) return false;
    this.applied = seq;
    this.fields = {};
    for (const [id, entry] of Object.entries(response.features)) {
      this.fields[id] = { status: entry.status, reason: entry.reason };
    }
    this.valid = response.configuration.valid;
    this.violations = response.configuration.violations;
    return true;
  }

  field(featureId: string): FieldState {
    return this.fields[featureId] ?? { status: "free" };
  }

  isDisabled(featureId: string): boolean {
    return this.field(featureId).status === "disabled";
  }

  reason(featureId: string): string | undefined {
    return this.field(featureId).reason;
  }

  /** The run/download controls are enabled only when the server has
   * declared the current configuration a valid complete experiment. */
  canDownload(): boolean {
    return this.valid;
  }

  canRun(): boolean {
    return this.valid && this.datasetFile !== null;
  }
}
