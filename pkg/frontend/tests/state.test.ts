import { describe, expect, it } from "vitest";

import { FormState } from "../src/state.js";
import type { ValidateResponse } from "../src/types.js";

function response(valid: boolean, disabled: Record<string, string> = {}): ValidateResponse {
  const features: ValidateResponse["features"] = {};
  for (const [id, reason] of Object.entries(disabled)) {
    features[id] = { status: "disabled", reason };
  }
  return { features, configuration: { valid, violations: valid ? [] : ["incomplete"] } };
}

describe("FormState", () => {
  it("applies validation responses verbatim", () => {
    const state = new FormState();
    const seq = state.nextSeq();
    state.applyValidation(response(false, { reweighing: "server says no" }), seq);
    expect(state.isDisabled("reweighing")).toBe(true);
    expect(state.reason("reweighing")).toBe("server says no");
    expect(state.valid).toBe(false);
  });

  it("discards stale responses (latest wins)", () => {
    const state = new FormState();
    const first = state.nextSeq();
    const second = state.nextSeq();
    expect(state.applyValidation(response(true), second)).toBe(true);
    expect(state.applyValidation(response(false, { accuracy: "old news" }), first)).toBe(false);
    expect(state.valid).toBe(true);
    expect(state.isDisabled("accuracy")).toBe(false);
  });

  it("gates download and run on server-declared validity", () => {
    const state = new FormState();
    expect(state.canDownload()).toBe(false);
    expect(state.canRun()).toBe(false);
    state.applyValidation(response(true), state.nextSeq());
    expect(state.canDownload()).toBe(true);
    expect(state.canRun()).toBe(false); // still no dataset
    state.datasetFile = new File(["a,b\n1,2\n"], "d.csv");
    expect(state.canRun()).toBe(true);
  });

  it("choose() keeps alternative groups exclusive", () => {
    const state = new FormState();
    state.choose("classification", ["classification", "regression"]);
    state.choose("regression", ["classification", "regression"]);
    expect([...state.selected]).toEqual(["regression"]);
  });

  it("serializes attributes by owning feature", () => {
    const state = new FormState();
    state.toggle("dataset", true);
    state.setAttribute("dataset", "label-name", "outcome");
    state.setAttribute("dataset", "label-name", "income");
    expect(state.configuration()).toEqual({
      selected: ["dataset"],
      attributes: { dataset: { "label-name": "income" } },
    });
    state.setAttribute("dataset", "label-name", "");
    expect(state.configuration().attributes).toEqual({});
  });
});
