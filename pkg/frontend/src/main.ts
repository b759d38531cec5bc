import { ApiClient } from "./api.js";
import { renderBanner, renderDetail, renderMetrics, renderQueue, renderTabs } from "./render.js";
import { PAGE_SIZE, TriageStore } from "./state.js";
import type { ModelKind, QueueTab, Verdict } from "./types.js";

const store = new TriageStore(new ApiClient());

const bannerEl = document.getElementById("banner")!;
const tabsEl = document.getElementById("tabs")!;
const queueEl = document.getElementById("queue")!;
const detailEl = document.getElementById("detail")!;
const metricsEl = document.getElementById("metrics")!;

store.subscribe((state) => {
  renderBanner(bannerEl, state);
  renderTabs(tabsEl, state);
  renderQueue(queueEl, state);
  renderDetail(detailEl, state);
  renderMetrics(metricsEl, state, store.canRetrain());
});

tabsEl.addEventListener("click", (event) => {
  const tab = (event.target as HTMLElement).dataset.tab as QueueTab | undefined;
  if (tab) void store.loadQueue(tab, 0);
});

queueEl.addEventListener("click", (event) => {
  const target = event.target as HTMLElement;
  const action = target.dataset.action;
  if (action === "prev" || action === "next") {
    const offset = store.state.page?.offset ?? 0;
    const delta = action === "next" ? PAGE_SIZE : -PAGE_SIZE;
    void store.loadQueue(undefined, Math.max(0, offset + delta));
    return;
  }
  const row = target.closest<HTMLElement>("tr[data-session-id]");
  if (row?.dataset.sessionId) void store.select(row.dataset.sessionId);
});

detailEl.addEventListener("click", (event) => {
  const verdict = (event.target as HTMLElement).dataset.verdict as Verdict | undefined;
  if (verdict) void store.submitLabel(verdict);
});

metricsEl.addEventListener("click", (event) => {
  const kind = (event.target as HTMLElement).dataset.kind as ModelKind | undefined;
  if (kind) void store.retrain(kind);
});

bannerEl.addEventListener("click", (event) => {
  if ((event.target as HTMLElement).dataset.action === "retry") {
    void store.retryPending();
    void store.loadQueue();
  }
});

// verdict shortcuts: triage throughput is the point of the tool
document.addEventListener("keydown", (event) => {
  if (event.target instanceof HTMLInputElement) return;
  if (event.key === "b") void store.submitLabel("benign");
  else if (event.key === "s") void store.submitLabel("suspicious");
  else if (event.key === "j" || event.key === "k") {
    const items = store.state.page?.items ?? [];
    if (items.length === 0) return;
    const current = items.findIndex(
      (item) => item.session_id === store.state.selected?.session_id,
    );
    const step = event.key === "j" ? 1 : -1;
    const next = Math.min(items.length - 1, Math.max(0, current + step));
    void store.select(items[next].session_id);
  }
});

void store.loadQueue("flagged", 0);
void store.refreshMetrics();
