/** Typed client over the control-service JSON endpoints.
 *
 * The fetch implementation is injected so tests can capture request
 * payloads; the browser app passes the real `fetch`.
 */

import {
  AnalyzeRequest,
  AnalyzeResponse,
  ArtifactInfo,
  CampaignRequest,
  CampaignStateResource,
  DecisionKind,
  PlotRequest,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly kind: string,
    message: string,
  ) {
    super(message);
  }
}

async function parseError(response: Response): Promise<ApiError> {
  let kind = "Error";
  let message = `${response.status}`;
  try {
    const body = (await response.json()) as { error?: string; message?: string };
    kind = body.error ?? kind;
    message = body.message ?? message;
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(response.status, kind, message);
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  private async requestJson<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers: body !== undefined ? { "Content-Type": "application/json" } : undefined,
      body: body !== undefined ? JSON.stringify(body) : undefined,
    });
    if (!response.ok) {
      throw await parseError(response);
    }
    return (await response.json()) as T;
  }

  startCampaign(request: CampaignRequest): Promise<CampaignStateResource> {
    return this.requestJson("POST", "/api/campaigns", request);
  }

  campaignState(): Promise<CampaignStateResource> {
    return this.requestJson("GET", "/api/campaign");
  }

  /** Never call without a pending decision; the server answers 409 otherwise. */
  postDecision(kind: DecisionKind): Promise<{ accepted: string }> {
    return this.requestJson("POST", "/api/campaign/decision", { kind });
  }

  columns(file: string): Promise<{ columns: string[]; numeric: Record<string, boolean> }> {
    return this.requestJson("GET", `/api/columns?file=${encodeURIComponent(file)}`);
  }

  async artifacts(): Promise<ArtifactInfo[]> {
    const body = await this.requestJson<{ files: ArtifactInfo[] }>(
      "GET",
      "/api/artifacts",
    );
    return body.files;
  }

  preprocess(resultsDir: string): Promise<{ data_csv: string; rows: number }> {
    return this.requestJson("POST", "/api/preprocess", { results_dir: resultsDir });
  }

  analyze(request: AnalyzeRequest): Promise<AnalyzeResponse> {
    return this.requestJson("POST", "/api/analyze", request);
  }

  async plot(request: PlotRequest): Promise<string> {
    const response = await this.fetchImpl(`${this.baseUrl}/api/plot`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(request),
    });
    if (!response.ok) {
      throw await parseError(response);
    }
    return response.text();
  }

  eventsUrl(since: number): string {
    return `${this.baseUrl}/api/events?since=${since}`;
  }
}
