import { ApiClient, ServiceError } from "./api.js";
import type {
  CVReport,
  MetricsResponse,
  ModelKind,
  QueueTab,
  SessionDetail,
  SessionPage,
  Verdict,
} from "./types.js";

export interface TriageState {
  tab: QueueTab;
  page: SessionPage | null;
  selected: SessionDetail | null;
  metrics: MetricsResponse | null;
  lastReport: CVReport | null;
  banner: string | null;
  notice: string | null;
  pending: { sessionId: string; verdict: Verdict } | null;
  retraining: boolean;
}

export const PAGE_SIZE = 50;

/** Minimum labels per class before the server accepts a retrain (5-fold CV). */
export const RETRAIN_MIN_PER_CLASS = 5;

type Listener = (state: TriageState) => void;

/**
 * Client-side session store. It holds server responses verbatim and never
 * derives a score, label outcome, or metric itself; every mutation round-trips
 * through the API and re-reads the affected views.
 */
export class TriageStore {
  readonly state: TriageState = {
    tab: "flagged",
    page: null,
    selected: null,
    metrics: null,
    lastReport: null,
    banner: null,
    notice: null,
    pending: null,
    retraining: false,
  };

  private listeners: Listener[] = [];
  private submitChain: Promise<void> = Promise.resolve();

  constructor(
    private readonly api: ApiClient,
    private readonly labeler = "analyst",
  ) {}

  subscribe(listener: Listener): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener(this.state);
  }

  async loadQueue(tab?: QueueTab, offset = 0): Promise<void> {
    if (tab) this.state.tab = tab;
    try {
      this.state.page = await this.api.listSessions(this.state.tab, offset, PAGE_SIZE);
      this.state.banner = null;
    } catch (err) {
      // stale rows must not masquerade as fresh ones
      this.state.page = null;
      this.state.banner = describe(err);
    }
    this.notify();
  }

  async select(sessionId: string): Promise<void> {
    try {
      this.state.selected = await this.api.getSession(sessionId);
      this.state.banner = null;
    } catch (err) {
      this.state.selected = null;
      this.state.banner = describe(err);
    }
    this.notify();
  }

  async refreshMetrics(): Promise<void> {
    try {
      this.state.metrics = await this.api.metrics();
    } catch (err) {
      this.state.banner = describe(err);
    }
    this.notify();
  }

  /**
   * Record a verdict for the selected session. Submissions are serialized and
   * a duplicate of the in-flight verdict is dropped, so a double-click posts
   * one effective label.
   */
  submitLabel(verdict: Verdict): Promise<void> {
    const selected = this.state.selected;
    if (!selected) return Promise.resolve();
    if (
      this.state.pending &&
      this.state.pending.sessionId === selected.session_id &&
      this.state.pending.verdict === verdict
    ) {
      return this.submitChain;
    }
    this.state.pending = { sessionId: selected.session_id, verdict };
    this.notify();

    this.submitChain = this.submitChain.then(() =>
      this.doSubmit(selected.session_id, verdict),
    );
    return this.submitChain;
  }

  private async doSubmit(sessionId: string, verdict: Verdict): Promise<void> {
    try {
      await this.api.submitLabel(sessionId, verdict, this.labeler);
      this.state.pending = null;
      this.state.notice = null;
      await this.loadQueue(undefined, this.state.page?.offset ?? 0);
      if (this.state.selected?.session_id === sessionId) {
        await this.select(sessionId);
      }
      await this.refreshMetrics();
    } catch (err) {
      if (err instanceof ServiceError && err.status === 404) {
        // the session vanished server-side: drop the stale row after a notice
        this.state.pending = null;
        this.state.notice = `session ${sessionId} no longer exists; removed from queue`;
        if (this.state.page) {
          this.state.page = {
            ...this.state.page,
            items: this.state.page.items.filter((i) => i.session_id !== sessionId),
            total: this.state.page.total - 1,
          };
        }
        if (this.state.selected?.session_id === sessionId) {
          this.state.selected = null;
        }
      } else {
        // keep the verdict visibly pending and retriable; it is NOT recorded
        this.state.banner = `label not recorded (${describe(err)}); retry to resubmit`;
      }
      this.notify();
    }
  }

  /** Resend a verdict that failed with a transient error. */
  retryPending(): Promise<void> {
    const pending = this.state.pending;
    if (!pending) return Promise.resolve();
    this.state.pending = null;
    this.submitChain = this.submitChain.then(() =>
      this.doSubmit(pending.sessionId, pending.verdict),
    );
    this.state.pending = pending;
    return this.submitChain;
  }

  canRetrain(): boolean {
    const metrics = this.state.metrics;
    return (
      !!metrics &&
      metrics.labeled_benign >= RETRAIN_MIN_PER_CLASS &&
      metrics.labeled_suspicious >= RETRAIN_MIN_PER_CLASS
    );
  }

  async retrain(kind: ModelKind): Promise<void> {
    this.state.retraining = true;
    this.state.banner = null;
    this.notify();
    try {
      this.state.lastReport = await this.api.retrain(kind);
      await this.refreshMetrics();
      // scores changed server-side; re-read the queue in the new order
      await this.loadQueue(undefined, 0);
      if (this.state.selected) {
        await this.select(this.state.selected.session_id);
      }
    } catch (err) {
      if (err instanceof ServiceError && err.status === 409) {
        this.state.banner = `cannot retrain: ${err.detail}`;
      } else {
        this.state.banner = describe(err);
      }
    } finally {
      this.state.retraining = false;
      this.notify();
    }
  }
}

function describe(err: unknown): string {
  if (err instanceof ServiceError) return `${err.code}: ${err.detail}`;
  if (err instanceof Error) return `service unreachable: ${err.message}`;
  return "service unreachable";
}
