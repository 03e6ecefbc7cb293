/** Browser shell: four tabs wired to the control service.
 *
 * Collect    start & steer a live campaign (chart, warnings, decisions)
 * Preprocess list artifacts, run the cleaning stage on a campaign folder
 * Analyze    variable selectors from CSV columns, interpreted report
 * Visualize  scatter/box figures rendered inline
 */

import { ApiClient, ApiError } from "./api.js";
import { applyEvent, CollectionView, initialCollectionView } from "./events.js";
import {
  renderAnalysis,
  renderArtifacts,
  renderCollection,
  renderError,
  renderSelectors,
} from "./render.js";
import { LiveStream } from "./stream.js";
import { AnalyzeRequest, DecisionKind, PlotRequest } from "./types.js";
import { ColumnTypes, validateAnalysisRequest, validatePlotRequest } from "./validate.js";

const TABS = ["collect", "preprocess", "analyze", "visualize"] as const;
type TabName = (typeof TABS)[number];

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function inputValue(id: string): string {
  return el<HTMLInputElement>(id).value.trim();
}

class App {
  private readonly api: ApiClient;
  private view: CollectionView = initialCollectionView();
  private stream: LiveStream | null = null;
  private decisionInFlight = false;
  private columnTypes: ColumnTypes = {};

  constructor() {
    this.api = new ApiClient("");
  }

  start(): void {
    for (const tab of TABS) {
      el<HTMLButtonElement>(`tab-${tab}`).addEventListener("click", () =>
        this.showTab(tab),
      );
    }
    el<HTMLButtonElement>("start-campaign").addEventListener("click", () => {
      void this.startCampaign();
    });
    el<HTMLDivElement>("collect-view").addEventListener("click", (ev) => {
      const target = ev.target as HTMLElement;
      if (target.matches("button.decision") && !target.hasAttribute("disabled")) {
        void this.sendDecision(target.dataset["kind"] as DecisionKind);
      }
    });
    el<HTMLButtonElement>("refresh-artifacts").addEventListener("click", () => {
      void this.refreshArtifacts();
    });
    el<HTMLButtonElement>("run-preprocess").addEventListener("click", () => {
      void this.runPreprocess();
    });
    el<HTMLButtonElement>("load-columns").addEventListener("click", () => {
      void this.loadColumns();
    });
    el<HTMLButtonElement>("run-analysis").addEventListener("click", () => {
      void this.runAnalysis();
    });
    el<HTMLButtonElement>("run-plot").addEventListener("click", () => {
      void this.runPlot();
    });
    this.showTab("collect");
    this.renderCollect();
  }

  private showTab(tab: TabName): void {
    for (const name of TABS) {
      el(`panel-${name}`).style.display = name === tab ? "block" : "none";
      el(`tab-${name}`).classList.toggle("active", name === tab);
    }
  }

  // -- collect -------------------------------------------------------------

  private renderCollect(): void {
    el("collect-view").innerHTML = renderCollection(this.view);
  }

  private async startCampaign(): Promise<void> {
    const status = el("collect-status");
    try {
      await this.api.startCampaign({
        package: inputValue("campaign-package"),
        results_dir: inputValue("campaign-results-dir"),
        iterations: Number(inputValue("campaign-iterations") || "10"),
        baseline_iterations: Number(inputValue("campaign-baseline") || "10"),
        seed: Number(inputValue("campaign-seed") || "0"),
        rate_hz: Number(inputValue("campaign-rate") || "5000"),
        profile: {
          baseline_current: Number(inputValue("campaign-baseline-current") || "0.2"),
          active_current: Number(inputValue("campaign-active-current") || "0.5"),
          noise_sd: Number(inputValue("campaign-noise") || "0.002"),
          dropped_samples: Number(inputValue("campaign-dropped") || "0"),
        },
        device: {
          test_duration_s: Number(inputValue("campaign-duration") || "1.0"),
        },
      });
      status.innerHTML = "";
      this.view = initialCollectionView();
      this.renderCollect();
      this.stream?.close();
      this.stream = new LiveStream(
        (since) => this.api.eventsUrl(since),
        (event) => {
          this.view = applyEvent(this.view, event);
          this.renderCollect();
        },
        (url) => new EventSource(url),
      );
      this.stream.start(0);
    } catch (error) {
      status.innerHTML = renderError(describe(error));
    }
  }

  private async sendDecision(kind: DecisionKind): Promise<void> {
    // the buttons only render enabled while a decision is pending
    if (!this.view.pendingDecision || this.decisionInFlight) return;
    this.decisionInFlight = true;
    try {
      await this.api.postDecision(kind);
      el("collect-status").innerHTML = "";
    } catch (error) {
      // a stale decision (resolved elsewhere) surfaces as a conflict
      el("collect-status").innerHTML = renderError(describe(error));
    } finally {
      this.decisionInFlight = false;
    }
  }

  // -- preprocess ------------------------------------------------------------

  private async refreshArtifacts(): Promise<void> {
    try {
      const files = await this.api.artifacts();
      el("artifact-list").innerHTML = renderArtifacts(files);
    } catch (error) {
      el("artifact-list").innerHTML = renderError(describe(error));
    }
  }

  private async runPreprocess(): Promise<void> {
    const out = el("preprocess-result");
    try {
      const result = await this.api.preprocess(inputValue("preprocess-dir"));
      out.textContent = `wrote ${result.data_csv} (${result.rows} iterations)`;
      await this.refreshArtifacts();
    } catch (error) {
      out.innerHTML = renderError(describe(error));
    }
  }

  // -- analyze ---------------------------------------------------------------

  private async loadColumns(): Promise<void> {
    const container = el("analysis-selectors");
    try {
      const response = await this.api.columns(inputValue("analysis-data"));
      this.columnTypes = response.numeric;
      container.innerHTML = renderSelectors(response.columns);
      el("plot-selectors").innerHTML = renderSelectors(response.columns);
    } catch (error) {
      container.innerHTML = renderError(describe(error));
    }
  }

  private selected(panel: string, name: string): string {
    const select = document.querySelector<HTMLSelectElement>(
      `#${panel} select[name="${name}"]`,
    );
    return select ? select.value : "";
  }

  private async runAnalysis(): Promise<void> {
    const out = el("analysis-result");
    try {
      const request: AnalyzeRequest = {
        data: [inputValue("analysis-data")],
        test: el<HTMLSelectElement>("analysis-test").value as AnalyzeRequest["test"],
        dependent: this.selected("panel-analyze", "dependent"),
      };
      const independent = this.selected("panel-analyze", "independent");
      if (el<HTMLInputElement>("analysis-use-independent").checked && independent) {
        request.independent = independent;
      }
      const problem = validateAnalysisRequest(
        request.test, request.dependent, request.independent, this.columnTypes,
      );
      if (problem !== null) {
        out.innerHTML = renderError(problem);
        return;
      }
      const filterValue = inputValue("analysis-filter-value");
      if (filterValue) {
        const column = this.selected("panel-analyze", "filter");
        const op = el<HTMLSelectElement>("analysis-filter-op").value;
        request.filter = `${column}${op}${filterValue}`;
      }
      const response = await this.api.analyze(request);
      out.innerHTML = renderAnalysis(response);
    } catch (error) {
      out.innerHTML = renderError(describe(error));
    }
  }

  // -- visualize ----------------------------------------------------------------

  private async runPlot(): Promise<void> {
    const out = el("plot-result");
    try {
      const request: PlotRequest = {
        data: [inputValue("analysis-data")],
        kind: el<HTMLSelectElement>("plot-kind").value as PlotRequest["kind"],
        dependent: this.selected("panel-visualize", "dependent"),
        independent: this.selected("panel-visualize", "independent"),
        title: inputValue("plot-title"),
      };
      const problem = validatePlotRequest(
        request.kind, request.dependent, request.independent, this.columnTypes,
      );
      if (problem !== null) {
        out.innerHTML = renderError(problem);
        return;
      }
      const order = inputValue("plot-x-order");
      if (order) request.x_label_order = order.split(",").map((s) => s.trim());
      out.innerHTML = await this.api.plot(request);
    } catch (error) {
      out.innerHTML = renderError(describe(error));
    }
  }
}

function describe(error: unknown): string {
  if (error instanceof ApiError) return `${error.kind}: ${error.message}`;
  return String(error);
}

window.addEventListener("DOMContentLoaded", () => new App().start());
