/** Durable offline event queue with exactly-once sync semantics.
 *
 * Events are persisted the moment they are enqueued and keep their ids for
 * life, so a page reload, a lost acknowledgement, or a retry always replays
 * the same identity and the server's dedupe makes the operation idempotent.
 *
 * State machine per event: queued -> sent -> acknowledged. A flush marks the
 * batch `sent` before the request leaves, so a crash between request and
 * acknowledgement leaves the events eligible for the next flush rather than
 * silently dropped. A failed request reverts `sent` back to `queued`.
 */

import type { ApiClient } from "./api.js";
import type { PendingEvent, SyncEventType, SyncResult, WasteClass } from "./types.js";

type SyncTransport = Pick<ApiClient, "sync">;

export const QUEUE_KEY = "wastesort.queue.v1";

const STATES = new Set(["queued", "sent", "acknowledged"]);

function isPendingEvent(value: unknown): value is PendingEvent {
  if (typeof value !== "object" || value === null) return false;
  const event = value as Record<string, unknown>;
  return (
    typeof event.client_event_id === "string" &&
    typeof event.type === "string" &&
    typeof event.label === "string" &&
    typeof event.timestamp === "string" &&
    typeof event.sync_state === "string" &&
    STATES.has(event.sync_state)
  );
}

export class OfflineQueue {
  private events: PendingEvent[];
  private flushing = false;

  constructor(private readonly storage: Storage) {
    this.events = this.load();
  }

  private load(): PendingEvent[] {
    const raw = this.storage.getItem(QUEUE_KEY);
    if (!raw) return [];
    try {
      const parsed: unknown = JSON.parse(raw);
      if (!Array.isArray(parsed)) return [];
      // acknowledged events are done; drop them on reload
      return parsed.filter(isPendingEvent).filter((e) => e.sync_state !== "acknowledged");
    } catch {
      return [];
    }
  }

  private persist(): void {
    this.storage.setItem(QUEUE_KEY, JSON.stringify(this.events));
  }

  /** Events still owed to the server (queued, plus sent-but-never-acked). */
  pending(): PendingEvent[] {
    return this.events
      .filter((e) => e.sync_state !== "acknowledged")
      .map((e) => ({ ...e }));
  }

  size(): number {
    return this.events.filter((e) => e.sync_state !== "acknowledged").length;
  }

  get inFlight(): boolean {
    return this.flushing;
  }

  enqueue(type: SyncEventType, label: WasteClass): PendingEvent {
    const event: PendingEvent = {
      client_event_id: crypto.randomUUID(),
      type,
      label,
      timestamp: new Date().toISOString(),
      sync_state: "queued",
    };
    this.events.push(event);
    this.persist();
    return { ...event };
  }

  /**
   * Push every pending event to the server in one batch.
   *
   * Returns the server's sync result, or null when there was nothing to
   * send or another flush is already in flight (flushes are serialized).
   */
  async flush(api: SyncTransport, userId: string): Promise<SyncResult | null> {
    if (this.flushing) return null;
    const batch = this.events.filter((e) => e.sync_state !== "acknowledged");
    if (batch.length === 0) return null;

    this.flushing = true;
    for (const event of batch) event.sync_state = "sent";
    this.persist();
    try {
      const result = await api.sync({
        user_id: userId,
        events: batch.map(({ sync_state: _state, ...wire }) => wire),
      });
      for (const event of batch) event.sync_state = "acknowledged";
      this.persist();
      return result;
    } catch (error) {
      for (const event of batch) {
        if (event.sync_state === "sent") event.sync_state = "queued";
      }
      this.persist();
      throw error;
    } finally {
      this.flushing = false;
    }
  }
}
