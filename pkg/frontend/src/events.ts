/** Pure reducer from campaign events to the Data Collection view model.
 *
 * The view is a function of the event history alone: replaying the same
 * log always reproduces the same view, which is what the tests do. The
 * pending-decision flag is set by `decision_required` and cleared by the
 * events that can only follow a resolution (`iteration_started`,
 * `phase_changed`, `campaign_done`), so no decision can be issued without
 * a pending request.
 */

import { appendPoints, ChartPoint, pointsFromPayload } from "./chart.js";
import { CampaignEvent } from "./types.js";

export interface WarningBanner {
  iteration: number;
  phase: string;
  droppedCount: number;
  message: string;
}

export interface CollectionView {
  phase: string;
  iteration: number;
  collectedSamples: number;
  expectedSamples: number;
  chart: ChartPoint[];
  warning: WarningBanner | null;
  pendingDecision: boolean;
  pendingReason: string | null;
  completedCount: number;
  failedCount: number;
  warningCount: number;
  done: boolean;
  lastSeq: number;
}

export function initialCollectionView(): CollectionView {
  return {
    phase: "idle",
    iteration: 0,
    collectedSamples: 0,
    expectedSamples: 0,
    chart: [],
    warning: null,
    pendingDecision: false,
    pendingReason: null,
    completedCount: 0,
    failedCount: 0,
    warningCount: 0,
    done: false,
    lastSeq: 0,
  };
}

function num(payload: Record<string, unknown>, key: string): number {
  const value = payload[key];
  return typeof value === "number" ? value : 0;
}

function str(payload: Record<string, unknown>, key: string): string {
  const value = payload[key];
  return typeof value === "string" ? value : "";
}

export function applyEvent(view: CollectionView, event: CampaignEvent): CollectionView {
  const next: CollectionView = { ...view, lastSeq: event.seq };
  switch (event.kind) {
    case "phase_changed":
      next.phase = str(event.payload, "phase");
      next.pendingDecision = false;
      next.pendingReason = null;
      next.warning = null;
      return next;
    case "iteration_started":
      next.iteration = num(event.payload, "index");
      next.collectedSamples = 0;
      next.expectedSamples = 0;
      next.chart = [];
      next.pendingDecision = false;
      next.pendingReason = null;
      next.warning = null;
      return next;
    case "samples_progress":
      next.collectedSamples = num(event.payload, "collected");
      next.expectedSamples = num(event.payload, "expected");
      next.chart = appendPoints(view.chart, pointsFromPayload(event.payload));
      return next;
    case "iteration_completed":
      next.completedCount = view.completedCount + 1;
      if (event.payload["failed"] === true) {
        next.failedCount = view.failedCount + 1;
      }
      return next;
    case "warning":
      next.warning = {
        iteration: num(event.payload, "index"),
        phase: str(event.payload, "phase"),
        droppedCount: num(event.payload, "dropped_count"),
        message: str(event.payload, "message"),
      };
      next.warningCount = view.warningCount + 1;
      return next;
    case "decision_required":
      next.pendingDecision = true;
      next.pendingReason = str(event.payload, "reason");
      return next;
    case "campaign_done":
      next.done = true;
      next.pendingDecision = false;
      next.pendingReason = null;
      next.warning = null;
      return next;
    default:
      return next;
  }
}

export function replay(events: readonly CampaignEvent[]): CollectionView {
  return events.reduce(applyEvent, initialCollectionView());
}
