/** Wire types for the service's JSON API, plus the client-side queue entry. */

export const WASTE_CLASSES = [
  "cardboard",
  "glass",
  "metal",
  "paper",
  "plastic",
  "trash",
] as const;

export type WasteClass = (typeof WASTE_CLASSES)[number];

export interface ClassifyResponse {
  event_id: string;
  label: WasteClass;
  confidence: number;
  probabilities: Record<string, number>;
  suggestion: string;
  carbon_saved_g: number;
  points_awarded: number;
  factor_table_version: string;
}

export interface FeedbackResponse {
  feedback_id: string;
}

export type SyncEventType = "classify_confirmed" | "feedback_submitted";

/** One event as it travels in a sync batch. */
export interface SyncEvent {
  client_event_id: string;
  type: SyncEventType;
  label: WasteClass;
  timestamp: string;
}

export interface SyncBatch {
  user_id: string;
  events: SyncEvent[];
}

export interface SyncResult {
  applied: number;
  duplicates: number;
  total_points: number;
  total_carbon_g: number;
}

export interface UserSummary {
  user_id: string;
  total_points: number;
  total_carbon_g: number;
  event_count: number;
}

export type LeaderboardRow = UserSummary;

export type SyncState = "queued" | "sent" | "acknowledged";

/**
 * A locally persisted event awaiting sync. The client_event_id is minted
 * once at enqueue time and never regenerated, so retries and page reloads
 * replay the same identity and the server can deduplicate.
 */
export interface PendingEvent extends SyncEvent {
  sync_state: SyncState;
}
