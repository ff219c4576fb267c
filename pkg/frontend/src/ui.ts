/** DOM rendering. Values shown in the result card come straight from the
 * service response; each field also exposes the raw value in data-raw so
 * tests can assert verbatim pass-through.
 */

import type {
  ClassifyResponse,
  LeaderboardRow,
  PendingEvent,
  SyncResult,
  UserSummary,
} from "./types.js";

function clear(root: HTMLElement): void {
  root.textContent = "";
}

function field(name: string, text: string, raw: unknown): HTMLElement {
  const wrap = document.createElement("div");
  wrap.className = "field";
  wrap.dataset.field = name;
  wrap.dataset.raw = String(raw);

  const label = document.createElement("span");
  label.className = "field-name";
  label.textContent = name;

  const value = document.createElement("span");
  value.className = "field-value";
  value.textContent = text;

  wrap.append(label, value);
  return wrap;
}

export function renderResult(root: HTMLElement, result: ClassifyResponse): void {
  clear(root);
  const card = document.createElement("div");
  card.className = "result-card";
  card.append(
    field("label", result.label, result.label),
    field("confidence", `${(result.confidence * 100).toFixed(1)}%`, result.confidence),
    field("suggestion", result.suggestion, result.suggestion),
    field("carbon", `${result.carbon_saved_g} g CO2e`, result.carbon_saved_g),
    field("points", `+${result.points_awarded}`, result.points_awarded),
  );
  root.append(card);
}

export function renderError(root: HTMLElement, message: string): void {
  clear(root);
  const note = document.createElement("p");
  note.className = "error";
  note.textContent = message;
  root.append(note);
}

export function renderStatus(root: HTMLElement, online: boolean): void {
  root.textContent = online
    ? "Online"
    : "Offline: classification needs the service; corrections will queue.";
  root.classList.toggle("offline", !online);
  root.classList.toggle("online", online);
}

export function renderQueue(root: HTMLElement, events: PendingEvent[]): void {
  clear(root);
  const badge = document.createElement("span");
  badge.className = "queue-count";
  badge.textContent = String(events.length);
  root.append(badge);

  const list = document.createElement("ul");
  list.className = "queue-list";
  for (const event of events) {
    const item = document.createElement("li");
    item.className = `queue-item state-${event.sync_state}`;
    item.dataset.eventId = event.client_event_id;
    item.textContent = `${event.type}: ${event.label} [${event.sync_state}]`;
    list.append(item);
  }
  root.append(list);
}

export function renderLeaderboard(
  root: HTMLElement,
  rows: LeaderboardRow[],
  limit: number,
): void {
  clear(root);
  if (rows.length === 0) {
    const empty = document.createElement("p");
    empty.className = "empty-state";
    empty.textContent = "No scores yet. Classify something to get on the board.";
    root.append(empty);
    return;
  }
  const list = document.createElement("ol");
  list.className = "leaderboard";
  // server order is authoritative; render as received, bounded by limit
  for (const row of rows.slice(0, limit)) {
    const item = document.createElement("li");
    item.dataset.userId = row.user_id;
    item.textContent = `${row.user_id}: ${row.total_points} pts, ${row.total_carbon_g} g`;
    list.append(item);
  }
  root.append(list);
}

export function renderSummary(root: HTMLElement, summary: UserSummary): void {
  clear(root);
  root.append(
    field("total points", String(summary.total_points), summary.total_points),
    field("carbon saved", `${summary.total_carbon_g} g`, summary.total_carbon_g),
    field("events", String(summary.event_count), summary.event_count),
  );
}

export function renderSyncResult(root: HTMLElement, result: SyncResult): void {
  clear(root);
  const note = document.createElement("p");
  note.className = "sync-note";
  note.textContent =
    `Synced: ${result.applied} applied, ${result.duplicates} duplicates. ` +
    `Server totals: ${result.total_points} pts, ${result.total_carbon_g} g.`;
  root.append(note);
}
