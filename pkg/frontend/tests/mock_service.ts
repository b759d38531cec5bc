/**
 * In-memory stand-in for the triage service, faithful to its JSON contract:
 * score-sorted session pages, latest-wins labels, 404/409 error bodies, and
 * score reassignment on retrain.
 */

import type {
  CVReport,
  MetricsResponse,
  QueueItem,
  SessionDetail,
  SessionPage,
} from "../src/types.js";

export interface MockSession {
  detail: SessionDetail;
  flagged: boolean;
  score: number;
}

const FOLD = { accuracy: 0.97, precision: 0.9, recall: 0.8, f1: 0.85, confusion: [8, 1, 180, 2] };

export class MockService {
  sessions = new Map<string, MockSession>();
  labels = new Map<string, string>();
  labelPosts = 0;
  retrains = 0;
  cvReport: CVReport | null = null;
  /** when set, the next request fails this way, then the flag clears */
  failNext: "network" | 500 | null = null;

  addSession(id: string, score: number, flagged = true, records = 3): void {
    this.sessions.set(id, {
      flagged,
      score,
      detail: {
        session_id: id,
        country: "Syria",
        city: "Damascus",
        date: "2015-03-01",
        records: Array.from({ length: records }, (_, i) => ({
          record_id: `${id}-r${i}`,
          date: "2015-03-01",
          time: `09:0${i}`,
          url: `http://example.com/page${i}`,
          url_tokens: [`page${i}`],
          keywords: i === 0 ? ["contact"] : [],
          duration_seconds: 30,
        })),
        evidence: flagged
          ? [{ rule_id: "sensitive_search_foreign", record_id: `${id}-r0`, matched: "contact" }]
          : [],
        label: null,
        score,
      },
    });
  }

  private page(status: string, offset: number, limit: number): SessionPage {
    const labeled = new Set(this.labels.keys());
    const pool = [...this.sessions.values()].filter((s) => {
      if (status === "flagged") return s.flagged;
      if (status === "unlabeled") return !labeled.has(s.detail.session_id);
      if (status === "labeled") return labeled.has(s.detail.session_id);
      return true;
    });
    const items: QueueItem[] = pool
      .map((s) => ({
        session_id: s.detail.session_id,
        country: s.detail.country,
        city: s.detail.city,
        date: s.detail.date,
        length: s.detail.records.length,
        rule_ids: [...new Set(s.detail.evidence.map((e) => e.rule_id))],
        score: s.score,
      }))
      .sort((a, b) => b.score - a.score || a.session_id.localeCompare(b.session_id));
    return { items: items.slice(offset, offset + limit), total: items.length, offset, limit };
  }

  metrics(): MetricsResponse {
    let benign = 0;
    let suspicious = 0;
    for (const label of this.labels.values()) {
      if (label === "suspicious") suspicious += 1;
      else benign += 1;
    }
    const flagged = [...this.sessions.values()].filter((s) => s.flagged).length;
    return {
      cv_report: this.cvReport,
      detection: {
        total_sessions: this.sessions.size,
        flagged_sessions: flagged,
        fraction: this.sessions.size ? flagged / this.sessions.size : 0,
      },
      labeled_benign: benign,
      labeled_suspicious: suspicious,
    };
  }

  fetch = async (input: RequestInfo | URL, init?: RequestInit): Promise<Response> => {
    if (this.failNext === "network") {
      this.failNext = null;
      throw new TypeError("fetch failed");
    }
    if (this.failNext === 500) {
      this.failNext = null;
      return json(500, { error: "internal_error", detail: "boom" });
    }

    const url = new URL(String(input), "http://mock");
    const path = url.pathname;
    const body = init?.body ? JSON.parse(String(init.body)) : {};

    if (path === "/api/sessions") {
      return json(
        200,
        this.page(
          url.searchParams.get("status") ?? "flagged",
          Number(url.searchParams.get("offset") ?? 0),
          Number(url.searchParams.get("limit") ?? 50),
        ),
      );
    }
    if (path.startsWith("/api/sessions/")) {
      const id = decodeURIComponent(path.slice("/api/sessions/".length));
      const session = this.sessions.get(id);
      if (!session) return json(404, { error: "not_found", detail: `unknown session id: ${id}` });
      return json(200, {
        ...session.detail,
        score: session.score,
        label: this.labels.get(id) ?? null,
      });
    }
    if (path === "/api/labels") {
      this.labelPosts += 1;
      if (!this.sessions.has(body.session_id)) {
        return json(404, { error: "not_found", detail: `unknown session id: ${body.session_id}` });
      }
      this.labels.set(body.session_id, body.label);
      return json(200, {
        session_id: body.session_id,
        label: body.label,
        labeler: body.labeler,
        labeled_at: "2026-01-01T00:00:00",
      });
    }
    if (path === "/api/retrain") {
      const { labeled_benign, labeled_suspicious } = this.metrics();
      for (const [name, have] of [
        ["suspicious", labeled_suspicious],
        ["benign", labeled_benign],
      ] as const) {
        if (have < 5) {
          return json(409, {
            error: "insufficient_labels",
            detail: `need 5 ${name} labels, have ${have}`,
          });
        }
      }
      this.retrains += 1;
      this.cvReport = {
        k: 5,
        fold_metrics: Array.from({ length: 5 }, () => ({ ...FOLD })),
        mean_accuracy: 0.97,
      };
      // deterministic, clearly different post-retrain ranking
      for (const session of this.sessions.values()) {
        const label = this.labels.get(session.detail.session_id);
        session.score = label === "suspicious" ? 0.99 : session.flagged ? 0.6 : 0.02;
      }
      return json(200, this.cvReport);
    }
    if (path === "/api/metrics") {
      return json(200, this.metrics());
    }
    return json(404, { error: "not_found", detail: path });
  };
}

function json(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}
