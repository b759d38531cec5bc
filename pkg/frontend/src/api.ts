import type {
  CVReport,
  LabelResponse,
  MetricsResponse,
  ModelKind,
  QueueTab,
  SessionDetail,
  SessionPage,
  Verdict,
} from "./types.js";

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    readonly detail: string,
  ) {
    super(`${code}: ${detail}`);
  }
}

type FetchFn = typeof fetch;

async function unwrap<T>(response: Response): Promise<T> {
  if (response.ok) {
    return (await response.json()) as T;
  }
  let code = "http_error";
  let detail = `status ${response.status}`;
  try {
    const body = (await response.json()) as { error?: string; detail?: string };
    if (body.error) code = body.error;
    if (body.detail) detail = body.detail;
  } catch {
    // non-JSON error body; keep the generic message
  }
  throw new ServiceError(response.status, code, detail);
}

/** Thin typed wrapper over the triage HTTP API; every value shown in the UI originates here. */
export class ApiClient {
  constructor(
    private readonly fetchFn: FetchFn = (...args) => fetch(...args),
    private readonly base = "",
  ) {}

  private get(path: string): Promise<Response> {
    return this.fetchFn(this.base + path);
  }

  private post(path: string, body: unknown): Promise<Response> {
    return this.fetchFn(this.base + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  async listSessions(status: QueueTab | "all", offset = 0, limit = 50): Promise<SessionPage> {
    const params = new URLSearchParams({
      status,
      sort: "score",
      offset: String(offset),
      limit: String(limit),
    });
    return unwrap(await this.get(`/api/sessions?${params}`));
  }

  async getSession(sessionId: string): Promise<SessionDetail> {
    return unwrap(await this.get(`/api/sessions/${encodeURIComponent(sessionId)}`));
  }

  async submitLabel(sessionId: string, label: Verdict, labeler: string): Promise<LabelResponse> {
    return unwrap(
      await this.post("/api/labels", { session_id: sessionId, label, labeler }),
    );
  }

  async sampleBenign(n: number, seed: number): Promise<{ labeled: number }> {
    return unwrap(await this.post("/api/labels/sample_benign", { n, seed }));
  }

  async retrain(kind: ModelKind): Promise<CVReport> {
    return unwrap(await this.post("/api/retrain", { kind }));
  }

  async metrics(): Promise<MetricsResponse> {
    return unwrap(await this.get("/api/metrics"));
  }
}
