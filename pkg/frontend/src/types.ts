/** JSON shapes of the control-service resources this dashboard consumes. */

export type EventKind =
  | "phase_changed"
  | "iteration_started"
  | "samples_progress"
  | "iteration_completed"
  | "warning"
  | "decision_required"
  | "campaign_done";

export interface CampaignEvent {
  seq: number;
  kind: EventKind;
  payload: Record<string, unknown>;
}

export type DecisionKind =
  | "rerun_iteration"
  | "next_iteration"
  | "uninstall_aut"
  | "clear_aut_data";

export const DECISION_KINDS: readonly DecisionKind[] = [
  "rerun_iteration",
  "next_iteration",
  "uninstall_aut",
  "clear_aut_data",
];

export interface RecordResource {
  phase: string;
  index: number;
  failed: boolean;
  reliability: { dropped_count: number; threshold: number; warn: boolean };
}

export interface CampaignStateResource {
  package: string;
  phase: string;
  current_iteration: number;
  iterations: number;
  baseline_iterations: number;
  done: boolean;
  pending: { reason: string; message: string } | null;
  records: RecordResource[];
  results_dir: string;
  error?: string;
}

export interface ArtifactInfo {
  path: string;
  size: number;
}

export interface AnalyzeRequest {
  data: string[];
  test: "summary" | "kruskal_wallis" | "anova" | "spearman";
  dependent: string;
  independent?: string;
  filter?: string;
  out?: string;
  alpha?: number;
}

export interface AnalyzeResponse {
  report_md: string;
  report_html: string;
  markdown: string;
  result: {
    test: string;
    statistic: number;
    df: number[];
    p_value: number;
    interpretation: string;
  } | null;
}

export interface PlotRequest {
  data: string[];
  kind: "scatter" | "box";
  dependent: string;
  independent: string;
  filter?: string;
  title?: string;
  width_px?: number;
  height_px?: number;
  x_label_order?: string[];
  out?: string;
}

export interface CampaignRequest {
  package: string;
  results_dir: string;
  iterations?: number;
  baseline_iterations?: number;
  seed?: number;
  auto_advance?: boolean;
  rate_hz?: number;
  warn_threshold?: number;
  profile?: {
    baseline_current?: number;
    active_current?: number;
    voltage?: number;
    noise_sd?: number;
    dropped_samples?: number;
  };
  device?: {
    api_level?: number;
    test_duration_s?: number;
    start_offset_s?: number;
  };
}
