// Application controller: fetch the workflow model, render the guided
// form, revalidate on every change (latest response wins), and drive the
// download / run / monitor / results flow.

import { ApiClient, ApiError } from "./api.js";
import { renderForm } from "./form.js";
import { renderQuestionnaire } from "./questionnaire.js";
import { monitorJob, renderProgress } from "./run.js";
import { renderResults } from "./results.js";
import { FormState } from "./state.js";
import type { FeatureModelResponse } from "./types.js";

export class App {
  readonly state = new FormState();
  private api: ApiClient;
  private model!: FeatureModelResponse;
  private formHost!: HTMLElement;
  private actionsHost!: HTMLElement;
  private resultsHost!: HTMLElement;

  constructor(api: ApiClient) {
    this.api = api;
  }

  async boot(root: HTMLElement): Promise<void> {
    this.model = await this.api.featureModel();
    root.textContent = "";

    const title = document.createElement("h1");
    title.textContent = "Fairness benchmarking workbench";
    root.appendChild(title);

    this.formHost = document.createElement("div");
    this.actionsHost = document.createElement("div");
    this.actionsHost.className = "actions";
    this.resultsHost = document.createElement("div");
    root.appendChild(this.formHost);
    root.appendChild(this.actionsHost);
    root.appendChild(this.resultsHost);

    await this.revalidate();
  }

  private handlers() {
    return {
      onToggle: (featureId: string, on: boolean) => {
        this.state.toggle(featureId, on);
        void this.revalidate();
      },
      onChoose: (featureId: string, siblings: string[]) => {
        this.state.choose(featureId, siblings);
        void this.revalidate();
      },
      onAttribute: (owner: string, name: string, value: string) => {
        this.state.setAttribute(owner, name, value);
        void this.revalidate();
      },
    };
  }

  async revalidate(): Promise<void> {
    const seq = this.state.nextSeq();
    const response = await this.api.validate(this.state.configuration());
    if (!this.state.applyValidation(response, seq)) return; // stale
    this.renderAll();
  }

  renderAll(): void {
    this.formHost.textContent = "";
    this.formHost.appendChild(renderForm(this.model.model, this.state, this.handlers()));
    this.formHost.appendChild(
      renderQuestionnaire(this.model.questionnaire, (metricIds) => {
        for (const id of metricIds) {
          if (!this.state.isDisabled(id)) this.state.toggle(id, true);
        }
        if (metricIds.length > 0) this.state.toggle("classification-metrics", true);
        void this.revalidate();
      }),
    );
    this.renderActions();
  }

  private renderActions(): void {
    this.actionsHost.textContent = "";

    const fileLabel = document.createElement("label");
    fileLabel.textContent = "Dataset CSV ";
    const file = document.createElement("input");
    file.type = "file";
    file.accept = ".csv,text/csv";
    file.addEventListener("change", () => {
      this.state.datasetFile = file.files?.[0] ?? null;
      this.renderActions();
    });
    fileLabel.appendChild(file);
    this.actionsHost.appendChild(fileLabel);

    const download = document.createElement("button");
    download.textContent = "Download experiment";
    download.dataset.action = "download";
    download.disabled = !this.state.canDownload();
    download.addEventListener("click", () => void this.downloadManifest());
    this.actionsHost.appendChild(download);

    const run = document.createElement("button");
    run.textContent = "Run on server";
    run.dataset.action = "run";
    run.disabled = !this.state.canRun();
    run.addEventListener("click", () => void this.runOnServer());
    this.actionsHost.appendChild(run);

    if (!this.state.valid && this.state.violations.length > 0) {
      const why = document.createElement("ul");
      why.className = "violations";
      for (const violation of this.state.violations) {
        const item = document.createElement("li");
        item.textContent = violation;
        why.appendChild(item);
      }
      this.actionsHost.appendChild(why);
    }
  }

  async downloadManifest(): Promise<void> {
    const text = await this.api.generateManifest(this.state.configuration());
    const blob = new Blob([text], { type: "application/toml" });
    const url = URL.createObjectURL(blob);
    const anchor = document.createElement("a");
    anchor.href = url;
    anchor.download = "experiment.toml";
    anchor.click();
    URL.revokeObjectURL(url);
  }

  async runOnServer(): Promise<void> {
    if (!this.state.canRun()) return;
    this.resultsHost.textContent = "";
    const progress = renderProgress();
    this.resultsHost.appendChild(progress.element);
    try {
      const manifest = await this.api.generateManifest(this.state.configuration());
      const jobId = await this.api.submitExperiment(manifest, this.state.datasetFile!);
      await monitorJob(this.api, jobId, {
        onProgress: (pct, jobState) => progress.update(pct, jobState),
        onDone: (id) => void this.showResults(id),
        onFailed: (message) => this.showFailure(message),
      });
    } catch (error) {
      if (error instanceof ApiError && error.violations.length > 0) {
        this.showFailure(error.violations.join("; "));
      } else {
        this.showFailure(String(error));
      }
    }
  }

  async showResults(jobId: string): Promise<void> {
    const [outcome, csv] = await Promise.all([
      this.api.result(jobId),
      this.api.reportCsv(jobId),
    ]);
    if (outcome.state !== "done" || !outcome.result) {
      this.showFailure(outcome.message ?? "no result available");
      return;
    }
    this.resultsHost.textContent = "";
    this.resultsHost.appendChild(renderResults(this.api, jobId, outcome.result, csv));
  }

  showFailure(message: string): void {
    const error = document.createElement("p");
    error.className = "error";
    error.textContent = message;
    this.resultsHost.appendChild(error);
  }
}

if (typeof window !== "undefined" && document.getElementById("app")) {
  const app = new App(new ApiClient(""));
  void app.boot(document.getElementById("app")!);
}
