/** Event-stream subscription with seq-resume across reconnects. */

import { CampaignEvent, EventKind } from "./types.js";

const EVENT_KINDS: readonly EventKind[] = [
  "phase_changed",
  "iteration_started",
  "samples_progress",
  "iteration_completed",
  "warning",
  "decision_required",
  "campaign_done",
];

export interface EventSourceLike {
  addEventListener(kind: string, handler: (msg: { lastEventId: string; data: string }) => void): void;
  close(): void;
  // `any` keeps the browser EventSource structurally assignable
  onerror: ((this: any, ev: any) => unknown) | null;
}

export type EventSourceFactory = (url: string) => EventSourceLike;

/**
 * Subscribes to the campaign event stream; on connection errors it
 * reconnects from the last seen sequence number so no event is missed or
 * duplicated. Closes itself after `campaign_done`.
 */
export class LiveStream {
  private source: EventSourceLike | null = null;
  private lastSeq = 0;
  private closed = false;

  constructor(
    private readonly urlFor: (since: number) => string,
    private readonly onEvent: (event: CampaignEvent) => void,
    private readonly factory: EventSourceFactory,
    private readonly reconnectDelayMs = 500,
  ) {}

  get resumeFrom(): number {
    return this.lastSeq;
  }

  start(since = 0): void {
    this.lastSeq = since;
    this.connect();
  }

  private connect(): void {
    if (this.closed) return;
    const source = this.factory(this.urlFor(this.lastSeq));
    this.source = source;
    for (const kind of EVENT_KINDS) {
      source.addEventListener(kind, (msg) => {
        const seq = Number(msg.lastEventId);
        if (!Number.isFinite(seq) || seq <= this.lastSeq) return;
        this.lastSeq = seq;
        const event: CampaignEvent = {
          seq,
          kind,
          payload: JSON.parse(msg.data) as Record<string, unknown>,
        };
        this.onEvent(event);
        if (kind === "campaign_done") {
          this.close();
        }
      });
    }
    source.onerror = () => {
      if (this.closed) return;
      source.close();
      setTimeout(() => this.connect(), this.reconnectDelayMs);
    };
  }

  close(): void {
    this.closed = true;
    this.source?.close();
    this.source = null;
  }
}
