import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import type { FetchLike } from "../src/api.js";
import type {
  ClassifyResponse,
  LeaderboardRow,
  SyncBatch,
  SyncResult,
  UserSummary,
  WasteClass,
} from "../src/types.js";

const HERE = dirname(fileURLToPath(import.meta.url));

/** Load the real index.html body into the jsdom document. */
export function mountPage(): void {
  const html = readFileSync(join(HERE, "..", "index.html"), "utf8");
  const start = html.indexOf("<body>") + "<body>".length;
  const end = html.indexOf("</body>");
  document.body.innerHTML = html.slice(start, end);
}

const POINTS: Record<string, number> = {
  classify_confirmed: 10,
  feedback_submitted: 5,
};

const CARBON: Record<WasteClass, number> = {
  cardboard: 120,
  glass: 150,
  metal: 900,
  paper: 110,
  plastic: 400,
  trash: 0,
};

interface Tally {
  points: number;
  carbon: number;
  events: number;
}

export interface FeedbackRecord {
  userId: string | null;
  predicted: string;
  corrected: string;
  eventId: string | null;
}

function json(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

/**
 * In-memory stand-in for the classification service. It reproduces the
 * behaviour the client depends on: idempotent sync keyed by
 * (user, client_event_id), server-side point and carbon accounting, and a
 * health probe that fails when the network is down.
 */
export class FakeServer {
  online = true;
  /** When set, the next /sync applies the batch but the response is lost. */
  dropNextSyncResponse = false;

  classifyResponse: ClassifyResponse = {
    event_id: "evt-1",
    label: "plastic",
    confidence: 0.9132,
    probabilities: {
      cardboard: 0.01,
      glass: 0.02,
      metal: 0.03,
      paper: 0.0168,
      plastic: 0.9132,
      trash: 0.01,
    },
    suggestion: "Rinse it out and recycle where facilities exist.",
    carbon_saved_g: 400,
    points_awarded: 10,
    factor_table_version: "fake-1",
  };

  /** Override to control what /leaderboard returns; null means computed. */
  leaderboardRows: LeaderboardRow[] | null = null;

  classifyCalls = 0;
  feedbacks: FeedbackRecord[] = [];
  syncCalls: SyncBatch[] = [];
  syncResults: SyncResult[] = [];

  private seen = new Set<string>();
  private tallies = new Map<string, Tally>();
  private feedbackCounter = 0;

  private credit(userId: string, type: string, label: WasteClass): void {
    const tally = this.tallies.get(userId) ?? { points: 0, carbon: 0, events: 0 };
    tally.points += POINTS[type] ?? 0;
    if (type === "classify_confirmed") {
      tally.carbon += CARBON[label];
    }
    tally.events += 1;
    this.tallies.set(userId, tally);
  }

  summary(userId: string): UserSummary {
    const tally = this.tallies.get(userId) ?? { points: 0, carbon: 0, events: 0 };
    return {
      user_id: userId,
      total_points: tally.points,
      total_carbon_g: tally.carbon,
      event_count: tally.events,
    };
  }

  leaderboard(limit: number): LeaderboardRow[] {
    if (this.leaderboardRows) {
      return this.leaderboardRows.slice(0, limit);
    }
    const rows = [...this.tallies.entries()]
      .map(([user_id, tally]) => ({
        user_id,
        total_points: tally.points,
        total_carbon_g: tally.carbon,
        event_count: tally.events,
      }))
      .sort((a, b) =>
        a.total_points === b.total_points
          ? a.user_id.localeCompare(b.user_id)
          : b.total_points - a.total_points,
      );
    return rows.slice(0, limit);
  }

  applySync(batch: SyncBatch): SyncResult {
    this.syncCalls.push(batch);
    let applied = 0;
    let duplicates = 0;
    for (const event of batch.events) {
      const key = `${batch.user_id}:${event.client_event_id}`;
      if (this.seen.has(key)) {
        duplicates += 1;
        continue;
      }
      this.seen.add(key);
      this.credit(batch.user_id, event.type, event.label);
      applied += 1;
    }
    const tally = this.summary(batch.user_id);
    const result: SyncResult = {
      applied,
      duplicates,
      total_points: tally.total_points,
      total_carbon_g: tally.total_carbon_g,
    };
    this.syncResults.push(result);
    return result;
  }

  readonly fetch: FetchLike = async (input, init) => {
    if (!this.online) {
      throw new TypeError("fetch failed");
    }
    const path = input.split("?")[0] ?? input;
    const headers = new Headers(init?.headers);
    const userId = headers.get("X-User-Id");

    if (path.endsWith("/healthz")) {
      return json({ status: "ok" });
    }
    if (path.endsWith("/api/v1/classify")) {
      this.classifyCalls += 1;
      const response = { ...this.classifyResponse };
      if (userId) {
        this.credit(userId, "classify_confirmed", response.label);
        response.points_awarded = POINTS["classify_confirmed"] ?? 0;
      } else {
        response.points_awarded = 0;
      }
      return json(response);
    }
    if (path.endsWith("/api/v1/feedback")) {
      const form = init?.body as FormData;
      this.feedbacks.push({
        userId,
        predicted: String(form.get("predicted")),
        corrected: String(form.get("corrected")),
        eventId: form.get("event_id") === null ? null : String(form.get("event_id")),
      });
      if (userId) {
        this.credit(userId, "feedback_submitted", "trash");
      }
      this.feedbackCounter += 1;
      return json({ feedback_id: `fb-${this.feedbackCounter}` });
    }
    if (path.endsWith("/api/v1/sync")) {
      const batch = JSON.parse(String(init?.body)) as SyncBatch;
      const result = this.applySync(batch);
      if (this.dropNextSyncResponse) {
        this.dropNextSyncResponse = false;
        throw new TypeError("connection reset before the response arrived");
      }
      return json(result);
    }
    if (path.endsWith("/api/v1/leaderboard")) {
      const query = input.split("?")[1] ?? "";
      const limit = Number(new URLSearchParams(query).get("limit") ?? "10");
      return json(this.leaderboard(limit));
    }
    if (path.includes("/api/v1/users/")) {
      const user = decodeURIComponent(path.split("/users/")[1]?.replace(/\/summary$/, "") ?? "");
      return json(this.summary(user));
    }
    return json({ error: "NotFound", detail: `no route for ${path}` }, 404);
  };
}
