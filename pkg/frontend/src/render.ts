import type { TriageState } from "./state.js";
import type { QueueTab } from "./types.js";

const TABS: QueueTab[] = ["flagged", "unlabeled", "labeled"];

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderBanner(container: HTMLElement, state: TriageState): void {
  container.replaceChildren();
  if (state.banner) {
    const banner = el("div", "banner error", state.banner);
    const retry = el("button", "retry", "retry");
    retry.dataset.action = "retry";
    banner.appendChild(retry);
    container.appendChild(banner);
  } else if (state.notice) {
    container.appendChild(el("div", "banner notice", state.notice));
  }
}

export function renderTabs(container: HTMLElement, state: TriageState): void {
  container.replaceChildren();
  for (const tab of TABS) {
    const button = el("button", tab === state.tab ? "tab active" : "tab", tab);
    button.dataset.tab = tab;
    container.appendChild(button);
  }
}

export function renderQueue(container: HTMLElement, state: TriageState): void {
  container.replaceChildren();
  if (!state.page) {
    if (!state.banner) container.appendChild(el("p", "empty", "loading…"));
    return;
  }
  if (state.page.items.length === 0) {
    const message =
      state.tab === "flagged" ? "no flagged sessions" : `no ${state.tab} sessions`;
    container.appendChild(el("p", "empty", message));
    return;
  }
  const table = el("table", "queue");
  const head = el("tr");
  for (const title of ["session", "location", "date", "records", "rules", "score"]) {
    head.appendChild(el("th", undefined, title));
  }
  table.appendChild(head);
  for (const item of state.page.items) {
    const row = el("tr", state.selected?.session_id === item.session_id ? "selected" : "");
    row.dataset.sessionId = item.session_id;
    row.appendChild(el("td", "mono", item.session_id));
    row.appendChild(el("td", undefined, `${item.city}, ${item.country}`));
    row.appendChild(el("td", undefined, item.date));
    row.appendChild(el("td", undefined, String(item.length)));
    row.appendChild(el("td", undefined, item.rule_ids.join(", ")));
    // the score is rendered exactly as the server reported it
    row.appendChild(el("td", "mono", item.score.toFixed(4)));
    table.appendChild(row);
  }
  container.appendChild(table);

  const paging = el("div", "paging");
  const { offset, limit, total } = state.page;
  const prev = el("button", undefined, "prev");
  prev.dataset.action = "prev";
  prev.disabled = offset <= 0;
  const next = el("button", undefined, "next");
  next.dataset.action = "next";
  next.disabled = offset + limit >= total;
  paging.appendChild(prev);
  paging.appendChild(el("span", undefined, `${offset + 1}–${Math.min(offset + limit, total)} of ${total}`));
  paging.appendChild(next);
  container.appendChild(paging);
}

export function renderDetail(container: HTMLElement, state: TriageState): void {
  container.replaceChildren();
  const detail = state.selected;
  if (!detail) {
    container.appendChild(el("p", "empty", "select a session"));
    return;
  }
  const header = el("div", "detail-header");
  header.appendChild(el("h2", undefined, `${detail.city}, ${detail.country} — ${detail.date}`));
  header.appendChild(el("span", "mono", `score ${detail.score.toFixed(4)}`));
  if (detail.label) header.appendChild(el("span", `label ${detail.label}`, detail.label));
  if (state.pending?.sessionId === detail.session_id) {
    header.appendChild(el("span", "label pending", `${state.pending.verdict} (pending)`));
  }
  container.appendChild(header);

  const evidenceByRecord = new Map<string, string[]>();
  for (const ev of detail.evidence) {
    const entries = evidenceByRecord.get(ev.record_id) ?? [];
    entries.push(`${ev.rule_id}: ${ev.matched}`);
    evidenceByRecord.set(ev.record_id, entries);
  }

  const table = el("table", "trajectory");
  const head = el("tr");
  for (const title of ["time", "page", "keywords", "evidence"]) {
    head.appendChild(el("th", undefined, title));
  }
  table.appendChild(head);
  // records arrive in server order (chronological trajectory); never re-sort
  for (const record of detail.records) {
    const hits = evidenceByRecord.get(record.record_id);
    const row = el("tr", hits ? "evidence-hit" : "");
    row.appendChild(el("td", "mono", record.time));
    row.appendChild(el("td", "mono", "/" + record.url_tokens.join("/")));
    row.appendChild(el("td", undefined, record.keywords.join(" ")));
    row.appendChild(el("td", "evidence", hits ? hits.join("; ") : ""));
    table.appendChild(row);
  }
  container.appendChild(table);

  const actions = el("div", "verdicts");
  for (const verdict of ["benign", "suspicious"] as const) {
    const key = verdict === "benign" ? "b" : "s";
    const button = el("button", verdict, `${verdict} (${key})`);
    button.dataset.verdict = verdict;
    actions.appendChild(button);
  }
  container.appendChild(actions);
}

export function renderMetrics(container: HTMLElement, state: TriageState, canRetrain: boolean): void {
  container.replaceChildren();
  const metrics = state.metrics;
  if (!metrics) return;

  const detection = el("p", undefined,
    `${metrics.detection.flagged_sessions} of ${metrics.detection.total_sessions} sessions flagged ` +
    `(${(metrics.detection.fraction * 100).toFixed(2)}%)`);
  container.appendChild(detection);
  container.appendChild(
    el("p", undefined,
      `labels: ${metrics.labeled_benign} benign, ${metrics.labeled_suspicious} suspicious`),
  );

  const controls = el("div", "retrain");
  for (const kind of ["logistic", "svm"] as const) {
    const button = el("button", undefined, state.retraining ? "retraining…" : `retrain ${kind}`);
    button.dataset.kind = kind;
    button.disabled = !canRetrain || state.retraining;
    controls.appendChild(button);
  }
  container.appendChild(controls);

  const report = metrics.cv_report;
  if (report) {
    const table = el("table", "cv");
    const head = el("tr");
    for (const title of ["fold", "accuracy", "precision", "recall", "f1"]) {
      head.appendChild(el("th", undefined, title));
    }
    table.appendChild(head);
    report.fold_metrics.forEach((fold, i) => {
      const row = el("tr");
      row.appendChild(el("td", undefined, String(i + 1)));
      for (const value of [fold.accuracy, fold.precision, fold.recall, fold.f1]) {
        row.appendChild(el("td", "mono", value.toFixed(4)));
      }
      table.appendChild(row);
    });
    const mean = el("tr", "mean");
    mean.appendChild(el("td", undefined, "mean"));
    const meanCell = el("td", "mono", report.mean_accuracy.toFixed(4));
    meanCell.colSpan = 4;
    mean.appendChild(meanCell);
    table.appendChild(mean);
    container.appendChild(table);
  }
}
