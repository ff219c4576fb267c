import { describe, expect, it, vi } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import type { FetchLike } from "../src/api.js";

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

function capture(response: Response | (() => Response)) {
  return vi.fn(async (_input: string, _init?: RequestInit) =>
    typeof response === "function" ? response() : response,
  );
}

describe("ApiClient", () => {
  it("posts classify as multipart with the user header", async () => {
    const fetchImpl = capture(jsonResponse({ label: "glass" }));
    const api = new ApiClient("", fetchImpl);
    const image = new File([new Uint8Array([1, 2, 3])], "bottle.jpg", {
      type: "image/jpeg",
    });

    await api.classify(image, "user-7");

    const [url, init] = fetchImpl.mock.calls[0] ?? [];
    expect(url).toBe("/api/v1/classify");
    expect(init?.method).toBe("POST");
    expect(new Headers(init?.headers).get("X-User-Id")).toBe("user-7");
    const form = init?.body as FormData;
    expect(form).toBeInstanceOf(FormData);
    const sent = form.get("image");
    expect(sent).toBeInstanceOf(File);
    expect((sent as File).name).toBe("bottle.jpg");
  });

  it("omits the user header for anonymous classify", async () => {
    const fetchImpl = capture(jsonResponse({ label: "glass" }));
    const api = new ApiClient("", fetchImpl);
    await api.classify(new Blob([new Uint8Array([9])]));

    const [, init] = fetchImpl.mock.calls[0] ?? [];
    expect(new Headers(init?.headers).get("X-User-Id")).toBeNull();
    // a bare Blob still gets a filename so the multipart part is a file
    expect(((init?.body as FormData).get("image") as File).name).toBe("capture.jpg");
  });

  it("sends feedback fields the service expects", async () => {
    const fetchImpl = capture(jsonResponse({ feedback_id: "fb-1" }));
    const api = new ApiClient("", fetchImpl);
    const image = new File([new Uint8Array([4])], "cup.jpg");

    await api.feedback(image, "plastic", "glass", {
      userId: "user-7",
      eventId: "evt-42",
    });

    const [url, init] = fetchImpl.mock.calls[0] ?? [];
    expect(url).toBe("/api/v1/feedback");
    const form = init?.body as FormData;
    expect(form.get("predicted")).toBe("plastic");
    expect(form.get("corrected")).toBe("glass");
    expect(form.get("event_id")).toBe("evt-42");
    expect(new Headers(init?.headers).get("X-User-Id")).toBe("user-7");
  });

  it("maps service error envelopes onto ApiError", async () => {
    const fetchImpl = capture(
      jsonResponse({ error: "UndecodableImage", detail: "bytes are not an image" }, 400),
    );
    const api = new ApiClient("", fetchImpl);

    const failure = await api
      .classify(new Blob([new Uint8Array([0])]))
      .then(() => null)
      .catch((error: unknown) => error);

    expect(failure).toBeInstanceOf(ApiError);
    const apiError = failure as ApiError;
    expect(apiError.status).toBe(400);
    expect(apiError.code).toBe("UndecodableImage");
    expect(apiError.message).toBe("bytes are not an image");
  });

  it("falls back to a status code when the error body is not JSON", async () => {
    const fetchImpl = capture(() => new Response("boom", { status: 500 }));
    const api = new ApiClient("", fetchImpl);

    const failure = await api.leaderboard().then(() => null).catch((e: unknown) => e);
    expect(failure).toBeInstanceOf(ApiError);
    expect((failure as ApiError).code).toBe("HTTP500");
  });

  it("posts sync batches as JSON", async () => {
    const fetchImpl = capture(
      jsonResponse({ applied: 1, duplicates: 0, total_points: 5, total_carbon_g: 0 }),
    );
    const api = new ApiClient("", fetchImpl);
    const batch = {
      user_id: "user-7",
      events: [
        {
          client_event_id: "c-1",
          type: "feedback_submitted" as const,
          label: "glass" as const,
          timestamp: "2026-08-17T00:00:00.000Z",
        },
      ],
    };

    const result = await api.sync(batch);
    expect(result.applied).toBe(1);

    const [url, init] = fetchImpl.mock.calls[0] ?? [];
    expect(url).toBe("/api/v1/sync");
    expect(new Headers(init?.headers).get("Content-Type")).toBe("application/json");
    expect(JSON.parse(String(init?.body))).toEqual(batch);
  });

  it("passes the leaderboard limit through the query string", async () => {
    const fetchImpl = capture(jsonResponse([]));
    const api = new ApiClient("", fetchImpl);
    await api.leaderboard(7);
    expect(fetchImpl.mock.calls[0]?.[0]).toBe("/api/v1/leaderboard?limit=7");
  });

  it("encodes the user id in the summary path", async () => {
    const fetchImpl = capture(
      jsonResponse({ user_id: "a/b", total_points: 0, total_carbon_g: 0, event_count: 0 }),
    );
    const api = new ApiClient("", fetchImpl);
    await api.summary("a/b");
    expect(fetchImpl.mock.calls[0]?.[0]).toBe("/api/v1/users/a%2Fb/summary");
  });

  it("joins base URLs without doubling slashes", async () => {
    const fetchImpl = capture(jsonResponse({ status: "ok" }));
    const api = new ApiClient("http://127.0.0.1:8901/", fetchImpl);
    await api.healthy();
    expect(fetchImpl.mock.calls[0]?.[0]).toBe("http://127.0.0.1:8901/healthz");
  });

  it("healthy() reflects status and treats network failure as unhealthy", async () => {
    expect(await new ApiClient("", capture(jsonResponse({}, 200))).healthy()).toBe(true);
    expect(await new ApiClient("", capture(() => new Response("", { status: 503 }))).healthy()).toBe(false);

    const down = vi.fn(async () => Promise.reject(new TypeError("fetch failed")));
    expect(await new ApiClient("", down as FetchLike).healthy()).toBe(false);
  });
});
