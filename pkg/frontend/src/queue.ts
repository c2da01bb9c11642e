/** Referral queue rendering: worst frames first, one row per referral. */

import type { Referral } from "./api.js";

export function formatQ(q: number): string {
  if (!Number.isFinite(q)) return "empty";
  if (q === 0) return "0";
  return q >= 0.01 ? q.toFixed(3) : q.toExponential(1);
}

export function renderQueue(
  container: HTMLElement,
  queue: readonly Referral[],
  onSelect: (item: Referral) => void,
  selected?: { slice: string; t: number } | null,
): void {
  container.textContent = "";
  if (queue.length === 0) {
    const empty = document.createElement("p");
    empty.className = "queue-empty";
    empty.setAttribute("data-testid", "queue-empty");
    empty.textContent = "no referrals";
    container.appendChild(empty);
    return;
  }
  const list = document.createElement("ol");
  list.className = "queue-list";
  for (const item of queue) {
    const row = document.createElement("li");
    row.className = "queue-row";
    row.setAttribute("data-testid", "queue-row");
    row.dataset.slice = item.slice;
    row.dataset.t = String(item.t);
    if (selected && selected.slice === item.slice && selected.t === item.t) {
      row.classList.add("selected");
    }
    const rank = document.createElement("span");
    rank.className = "queue-rank";
    rank.textContent = `#${item.rank}`;
    const label = document.createElement("span");
    label.className = "queue-label";
    label.textContent = `${item.slice} · frame ${item.t}`;
    const q = document.createElement("span");
    q.className = "queue-q";
    q.textContent = `q ${formatQ(item.q_frame)}`;
    const badge = document.createElement("span");
    badge.className = `badge badge-${item.status}`;
    badge.setAttribute("data-testid", "queue-badge");
    badge.textContent = item.status;
    row.append(rank, label, q, badge);
    row.addEventListener("click", () => onSelect(item));
    list.appendChild(row);
  }
  container.appendChild(list);
}

export function renderProgress(
  container: HTMLElement,
  progress: { total: number; pending: number; accepted: number; corrected: number } | null,
): void {
  if (!progress) {
    container.textContent = "";
    return;
  }
  container.textContent =
    `${progress.total - progress.pending}/${progress.total} reviewed · ` +
    `${progress.accepted} accepted · ${progress.corrected} corrected · ` +
    `${progress.pending} pending`;
}
