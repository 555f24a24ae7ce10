// A scripted stand-in for the REST service. It does not re-implement any
// constraint logic: every /validate reply is assembled from the canned
// rules configured on the instance, which is exactly the point of the
// mirroring tests (the UI must render whatever the server says).

import type { FetchLike } from "../src/api.js";
import type {
  FeatureModelResponse,
  JobStatus,
  ResultDocument,
  ValidateResponse,
  WorkflowModel,
} from "../src/types.js";

export const MLP_MESSAGE = "Not compatible with MLP Classifier or MLP Regressor";

export function miniModel(): WorkflowModel {
  const features = [
    { id: "experiment", name: "Experiment", parent: null, mandatory: true,
      children: ["dataset", "ml-model", "fairness-methods", "metrics"] },
    { id: "dataset", name: "Dataset", parent: "experiment", mandatory: true, children: [] },
    { id: "ml-model", name: "ML Model", parent: "experiment", mandatory: true,
      children: ["classification", "regression"] },
    { id: "classification", name: "Classification", parent: "ml-model", mandatory: false,
      children: ["logistic-regression", "mlp-classifier"] },
    { id: "logistic-regression", name: "Logistic Regression", parent: "classification",
      mandatory: false, children: [] },
    { id: "mlp-classifier", name: "MLP Classifier", parent: "classification",
      mandatory: false, children: [] },
    { id: "regression", name: "Regression", parent: "ml-model", mandatory: false, children: [] },
    { id: "fairness-methods", name: "Fairness Methods", parent: "experiment", mandatory: true,
      children: ["no-method", "reweighing"] },
    { id: "no-method", name: "No Method", parent: "fairness-methods", mandatory: false,
      children: [] },
    { id: "reweighing", name: "Reweighing", parent: "fairness-methods", mandatory: false,
      children: [] },
    { id: "metrics", name: "Metrics", parent: "experiment", mandatory: true,
      children: ["accuracy", "statistical-parity"] },
    { id: "accuracy", name: "Accuracy", parent: "metrics", mandatory: false, children: [] },
    { id: "statistical-parity", name: "Statistical Parity", parent: "metrics",
      mandatory: false, children: [] },
  ];
  return {
    root: "experiment",
    features,
    groups: [
      { parent: "ml-model", kind: "alternative", members: ["classification", "regression"] },
      { parent: "fairness-methods", kind: "or", members: ["no-method", "reweighing"] },
      { parent: "metrics", kind: "or", members: ["accuracy", "statistical-parity"] },
      { parent: "classification", kind: "or",
        members: ["logistic-regression", "mlp-classifier"] },
    ],
    attributes: [
      { owner: "dataset", name: "label-name", kind: "text", required: true, choices: [] },
    ],
    constraints: [
      { kind: "excludes", a: "reweighing", b: "mlp-classifier", message: MLP_MESSAGE },
    ],
  };
}

const IMPLIED = new Set(["experiment", "dataset", "ml-model", "fairness-methods", "metrics"]);

export interface ScriptedRule {
  /** feature to disable when `trigger` is in the selection */
  trigger: string;
  disables: string;
  reason: string;
}

export class FakeServer {
  model: WorkflowModel = miniModel();
  rules: ScriptedRule[] = [{ trigger: "mlp-classifier", disables: "reweighing", reason: MLP_MESSAGE }];
  /** selections (sorted, comma-joined) the server considers complete+valid */
  validSelections = new Set<string>();
  statusScript: JobStatus[] = [];
  resultDoc: ResultDocument | null = null;
  reportCsv = "";
  submitResponses: number[] = [];
  validateCalls: string[][] = [];
  private statusCursor = 0;

  markValid(selected: string[]): void {
    this.validSelections.add([...selected].sort().join(","));
  }

  private validateBody(body: { selected: string[] }): ValidateResponse {
    this.validateCalls.push([...body.selected]);
    const selected = new Set(body.selected);
    const features: ValidateResponse["features"] = {};
    for (const f of this.model.features) {
      if (selected.has(f.id)) features[f.id] = { status: "selected" };
      else if (IMPLIED.has(f.id)) features[f.id] = { status: "implied" };
      else features[f.id] = { status: "free" };
    }
    for (const rule of this.rules) {
      if (selected.has(rule.trigger) && !selected.has(rule.disables)) {
        features[rule.disables] = { status: "disabled", reason: rule.reason };
      }
    }
    const valid = this.validSelections.has([...selected].sort().join(","));
    return {
      features,
      configuration: { valid, violations: valid ? [] : ["configuration incomplete"] },
    };
  }

  fetch: FetchLike = async (input, init) => {
    const url = String(input);
    const json = (body: unknown, status = 200) =>
      new Response(JSON.stringify(body), {
        status,
        headers: { "content-type": "application/json" },
      });

    if (url.endsWith("/api/v1/featuremodel")) {
      const payload: FeatureModelResponse = {
        document: "",
        model: this.model,
        questionnaire: {
          version: 1,
          questions: [
            { id: "focus", text: "What should be equal?",
              options: ["equal-outcomes", "equal-errors"], required: true },
          ],
          rules: [
            { when: { focus: ["equal-outcomes"] }, recommend: ["statistical-parity"] },
          ],
        },
      };
      return json(payload);
    }
    if (url.endsWith("/api/v1/validate")) {
      const body = JSON.parse(String(init?.body));
      return json(this.validateBody(body));
    }
    if (url.endsWith("/api/v1/manifest")) {
      const body = JSON.parse(String(init?.body));
      const valid = this.validSelections.has([...body.selected].sort().join(","));
      if (!valid) {
        return json({ error: "invalid", violations: ["configuration incomplete"] }, 422);
      }
      return new Response("version = 1\n", {
        status: 200,
        headers: { "content-type": "application/toml" },
      });
    }
    if (url.endsWith("/api/v1/experiments") && init?.method === "POST") {
      const status = 202;
      this.submitResponses.push(status);
      return json({ id: "job-1" }, status);
    }
    if (url.includes("/status")) {
      const step = this.statusScript[Math.min(this.statusCursor, this.statusScript.length - 1)];
      this.statusCursor += 1;
      return json(step);
    }
    if (url.includes("/result")) {
      return json({ state: "done", result: this.resultDoc });
    }
    if (url.includes("/report.csv")) {
      return new Response(this.reportCsv, { status: 200, headers: { "content-type": "text/csv" } });
    }
    return json({ error: `unexpected url ${url}` }, 500);
  };
}

export async function flush(times = 6): Promise<void> {
  for (let i = 0; i < times; i++) {
    await new Promise((resolve) => setTimeout(resolve, 0));
  }
}
