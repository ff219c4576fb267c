/** Thin fetch wrapper over the service API. No classification logic lives here. */

import type {
  ClassifyResponse,
  FeedbackResponse,
  LeaderboardRow,
  SyncBatch,
  SyncResult,
  UserSummary,
  WasteClass,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** A non-2xx response, carrying the service's machine-readable error code. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    detail: string,
  ) {
    super(detail || code);
    this.name = "ApiError";
  }
}

async function toApiError(response: Response): Promise<ApiError> {
  let code = `HTTP${response.status}`;
  let detail = "";
  try {
    const body = (await response.json()) as { error?: string; detail?: string };
    if (typeof body.error === "string") code = body.error;
    if (typeof body.detail === "string") detail = body.detail;
  } catch {
    // non-JSON error body; keep the status-based code
  }
  return new ApiError(response.status, code, detail);
}

export class ApiClient {
  private readonly baseUrl: string;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl = "", fetchImpl?: FetchLike) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    this.fetchImpl = fetchImpl ?? ((input, init) => globalThis.fetch(input, init));
  }

  private async requestJson<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, init);
    if (!response.ok) throw await toApiError(response);
    return (await response.json()) as T;
  }

  classify(image: Blob, userId?: string): Promise<ClassifyResponse> {
    const form = new FormData();
    form.append("image", image, image instanceof File ? image.name : "capture.jpg");
    return this.requestJson<ClassifyResponse>("/api/v1/classify", {
      method: "POST",
      body: form,
      headers: userId ? { "X-User-Id": userId } : undefined,
    });
  }

  feedback(
    image: Blob,
    predicted: WasteClass,
    corrected: WasteClass,
    options: { userId?: string; eventId?: string } = {},
  ): Promise<FeedbackResponse> {
    const form = new FormData();
    form.append("image", image, image instanceof File ? image.name : "capture.jpg");
    form.append("predicted", predicted);
    form.append("corrected", corrected);
    if (options.eventId) form.append("event_id", options.eventId);
    return this.requestJson<FeedbackResponse>("/api/v1/feedback", {
      method: "POST",
      body: form,
      headers: options.userId ? { "X-User-Id": options.userId } : undefined,
    });
  }

  sync(batch: SyncBatch): Promise<SyncResult> {
    return this.requestJson<SyncResult>("/api/v1/sync", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(batch),
    });
  }

  leaderboard(limit = 10): Promise<LeaderboardRow[]> {
    return this.requestJson<LeaderboardRow[]>(`/api/v1/leaderboard?limit=${limit}`);
  }

  summary(userId: string): Promise<UserSummary> {
    return this.requestJson<UserSummary>(
      `/api/v1/users/${encodeURIComponent(userId)}/summary`,
    );
  }

  /** Liveness probe; any network or status failure counts as unhealthy. */
  async healthy(): Promise<boolean> {
    try {
      const response = await this.fetchImpl(this.baseUrl + "/healthz");
      return response.ok;
    } catch {
      return false;
    }
  }
}
