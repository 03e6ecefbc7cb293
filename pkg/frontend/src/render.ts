/** Pure HTML renderers; the app shell assigns them to tab containers. */

import { chartSvg } from "./chart.js";
import { CollectionView } from "./events.js";
import { AnalyzeResponse, ArtifactInfo, DecisionKind } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

const DECISION_LABELS: readonly [DecisionKind, string][] = [
  ["rerun_iteration", "Re-run iteration"],
  ["next_iteration", "Next iteration"],
  ["uninstall_aut", "Uninstall app"],
  ["clear_aut_data", "Clear app data"],
];

export function renderDecisionButtons(enabled: boolean): string {
  const state = enabled ? "" : " disabled";
  const buttons = DECISION_LABELS.map(
    ([kind, label]) =>
      `<button class="decision" data-kind="${kind}"${state}>${label}</button>`,
  );
  return `<div class="decisions">${buttons.join("")}</div>`;
}

export function renderCollection(view: CollectionView): string {
  const parts: string[] = [];
  parts.push(
    `<div class="status">` +
      `<span class="phase">phase: ${escapeHtml(view.phase)}</span>` +
      `<span class="iteration">iteration: ${view.iteration}</span>` +
      `<span class="completed">completed: ${view.completedCount}</span>` +
      (view.failedCount ? `<span class="failed">failed: ${view.failedCount}</span>` : "") +
      `</div>`,
  );
  if (view.expectedSamples > 0 && !view.done) {
    parts.push(
      `<progress max="${view.expectedSamples}" value="${view.collectedSamples}"></progress>`,
    );
  }
  parts.push(chartSvg(view.chart));
  if (view.warning !== null) {
    parts.push(
      `<div class="warning-banner">` +
        `${view.warning.droppedCount} samples dropped in iteration ` +
        `${view.warning.iteration}; check current/voltage data</div>`,
    );
  }
  parts.push(renderDecisionButtons(view.pendingDecision));
  if (view.done) {
    parts.push(`<div class="done">campaign complete</div>`);
  }
  return parts.join("\n");
}

/** One select per analysis variable, every CSV column an option in each. */
export function renderSelectors(columns: readonly string[]): string {
  const options = columns
    .map((c) => `<option value="${escapeHtml(c)}">${escapeHtml(c)}</option>`)
    .join("");
  const select = (name: string) =>
    `<label class="variable">${name}` +
    `<select class="variable-select" name="${name}">${options}</select></label>`;
  return [select("dependent"), select("independent"), select("filter")].join("\n");
}

export function renderAnalysis(response: AnalyzeResponse): string {
  const parts: string[] = [];
  if (response.result) {
    parts.push(
      `<p class="interpretation">${escapeHtml(response.result.interpretation)}</p>`,
    );
    parts.push(
      `<p class="result-line">statistic=${response.result.statistic.toPrecision(6)} ` +
        `p=${response.result.p_value.toPrecision(6)}</p>`,
    );
  }
  parts.push(`<pre class="report">${escapeHtml(response.markdown)}</pre>`);
  return parts.join("\n");
}

export function renderArtifacts(files: readonly ArtifactInfo[]): string {
  const rows = files
    .map(
      (f) =>
        `<tr><td class="artifact" data-path="${escapeHtml(f.path)}">` +
        `${escapeHtml(f.path)}</td><td>${f.size}</td></tr>`,
    )
    .join("");
  return `<table class="artifacts"><tr><th>file</th><th>bytes</th></tr>${rows}</table>`;
}

export function renderError(message: string): string {
  return `<div class="error">${escapeHtml(message)}</div>`;
}
