/** Application wiring: glue the API client, offline queue, connectivity
 * monitor and renderers to the page. The handle object the factory returns
 * exposes the same operations the DOM listeners call, so tests can drive
 * the app deterministically without synthesizing input events.
 */

import { ApiClient, ApiError } from "./api.js";
import { ConnectivityMonitor } from "./connectivity.js";
import { OfflineQueue } from "./queue.js";
import type { ClassifyResponse, SyncResult, WasteClass } from "./types.js";
import { WASTE_CLASSES } from "./types.js";
import {
  renderError,
  renderLeaderboard,
  renderQueue,
  renderResult,
  renderStatus,
  renderSummary,
  renderSyncResult,
} from "./ui.js";

export const USER_KEY = "wastesort.user.v1";

export function loadUserId(storage: Storage): string {
  let id = storage.getItem(USER_KEY);
  if (!id) {
    id = `web-${crypto.randomUUID()}`;
    storage.setItem(USER_KEY, id);
  }
  return id;
}

export interface AppOptions {
  storage?: Storage;
  probeIntervalMs?: number;
}

export interface AppHandles {
  userId: string;
  queue: OfflineQueue;
  monitor: ConnectivityMonitor;
  classifyImage(image: File): Promise<ClassifyResponse | null>;
  submitCorrection(corrected: WasteClass): Promise<boolean>;
  flushQueue(): Promise<SyncResult | null>;
  refreshLeaderboard(limit?: number): Promise<void>;
  refreshSummary(): Promise<void>;
  start(): void;
  stop(): void;
}

function requireElement(doc: Document, id: string): HTMLElement {
  const element = doc.getElementById(id);
  if (!element) throw new Error(`page is missing #${id}`);
  return element;
}

export function createApp(doc: Document, api: ApiClient, options: AppOptions = {}): AppHandles {
  const storage = options.storage ?? window.localStorage;
  const userId = loadUserId(storage);
  const queue = new OfflineQueue(storage);
  const monitor = new ConnectivityMonitor(() => api.healthy(), options.probeIntervalMs ?? 5000);

  const resultPane = requireElement(doc, "result");
  const statusPane = requireElement(doc, "status");
  const queuePane = requireElement(doc, "queue");
  const leaderboardPane = requireElement(doc, "leaderboard");
  const summaryPane = requireElement(doc, "summary");
  const syncPane = requireElement(doc, "sync-result");

  let lastResult: ClassifyResponse | null = null;
  let lastImage: File | null = null;

  const showQueue = (): void => renderQueue(queuePane, queue.pending());

  async function classifyImage(image: File): Promise<ClassifyResponse | null> {
    if (!monitor.isOnline) {
      renderError(resultPane, "Offline: classification needs the service connection.");
      return null;
    }
    try {
      const result = await api.classify(image, userId);
      lastResult = result;
      lastImage = image;
      renderResult(resultPane, result);
      await refreshSummary();
      return result;
    } catch (error) {
      renderError(resultPane, describe(error));
      return null;
    }
  }

  async function submitCorrection(corrected: WasteClass): Promise<boolean> {
    if (!lastResult || !lastImage) {
      renderError(syncPane, "Classify an image before correcting it.");
      return false;
    }
    if (corrected === lastResult.label) {
      // the service would reject this too; save the round-trip
      renderError(syncPane, "Pick a class different from the prediction.");
      return false;
    }
    if (monitor.isOnline) {
      try {
        await api.feedback(lastImage, lastResult.label, corrected, {
          userId,
          eventId: lastResult.event_id,
        });
        await refreshSummary();
        return true;
      } catch (error) {
        renderError(syncPane, describe(error));
        return false;
      }
    }
    queue.enqueue("feedback_submitted", corrected);
    showQueue();
    return true;
  }

  async function flushQueue(): Promise<SyncResult | null> {
    let result: SyncResult | null = null;
    try {
      result = await queue.flush(api, userId);
    } catch {
      // events stay queued; the next reconnect retries with the same ids
    }
    showQueue();
    if (result) {
      renderSyncResult(syncPane, result);
      await refreshSummary();
    }
    return result;
  }

  async function refreshLeaderboard(limit = 10): Promise<void> {
    try {
      renderLeaderboard(leaderboardPane, await api.leaderboard(limit), limit);
    } catch (error) {
      renderError(leaderboardPane, describe(error));
    }
  }

  async function refreshSummary(): Promise<void> {
    try {
      renderSummary(summaryPane, await api.summary(userId));
    } catch (error) {
      renderError(summaryPane, describe(error));
    }
  }

  monitor.onChange((online) => {
    renderStatus(statusPane, online);
    if (online) void flushQueue();
  });

  for (const inputId of ["camera-input", "file-input"]) {
    const input = doc.getElementById(inputId);
    input?.addEventListener("change", () => {
      const file = (input as HTMLInputElement).files?.[0];
      if (file) void classifyImage(file);
    });
  }

  const correctionSelect = doc.getElementById("corrected") as HTMLSelectElement | null;
  if (correctionSelect && correctionSelect.options.length === 0) {
    for (const name of WASTE_CLASSES) {
      const option = doc.createElement("option");
      option.value = name;
      option.textContent = name;
      correctionSelect.append(option);
    }
  }
  doc.getElementById("correct-button")?.addEventListener("click", () => {
    if (correctionSelect) void submitCorrection(correctionSelect.value as WasteClass);
  });
  doc.getElementById("sync-button")?.addEventListener("click", () => void flushQueue());
  doc.getElementById("leaderboard-button")?.addEventListener("click", () => {
    const limitInput = doc.getElementById("leaderboard-limit") as HTMLInputElement | null;
    void refreshLeaderboard(limitInput ? Number(limitInput.value) || 10 : 10);
  });

  showQueue();

  return {
    userId,
    queue,
    monitor,
    classifyImage,
    submitCorrection,
    flushQueue,
    refreshLeaderboard,
    refreshSummary,
    start: () => monitor.start(window),
    stop: () => monitor.stop(),
  };
}

function describe(error: unknown): string {
  if (error instanceof ApiError) return `${error.code}: ${error.message}`;
  return "The service is unreachable. Try again once you are back online.";
}
