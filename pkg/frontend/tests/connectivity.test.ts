import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { ConnectivityMonitor } from "../src/connectivity.js";

type Handler = () => void;

class FakeTarget {
  handlers = new Map<string, Handler[]>();

  addEventListener = vi.fn((name: string, handler: Handler) => {
    const list = this.handlers.get(name) ?? [];
    list.push(handler);
    this.handlers.set(name, list);
  });

  removeEventListener = vi.fn((name: string, handler: Handler) => {
    const list = this.handlers.get(name) ?? [];
    this.handlers.set(name, list.filter((h) => h !== handler));
  });

  emit(name: string): void {
    for (const handler of this.handlers.get(name) ?? []) handler();
  }
}

function scriptedProbe(results: boolean[]) {
  let index = 0;
  return vi.fn(async () => {
    const value = results[Math.min(index, results.length - 1)] ?? false;
    index += 1;
    return value;
  });
}

describe("ConnectivityMonitor", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it("notifies on the first probe and on every transition, never on repeats", async () => {
    const probe = scriptedProbe([true, true, false, false, true]);
    const monitor = new ConnectivityMonitor(probe, 1000);
    const seen: boolean[] = [];
    monitor.onChange((online) => seen.push(online));

    for (let i = 0; i < 5; i += 1) await monitor.check();

    expect(seen).toEqual([true, false, true]);
    expect(monitor.isOnline).toBe(true);
  });

  it("treats a rejecting probe as offline", async () => {
    const probe = vi.fn(async () => Promise.reject(new Error("down")));
    const monitor = new ConnectivityMonitor(probe, 1000);

    expect(await monitor.check()).toBe(false);
    expect(monitor.isOnline).toBe(false);
  });

  it("is offline until the first probe completes", () => {
    const monitor = new ConnectivityMonitor(async () => true, 1000);
    expect(monitor.isOnline).toBe(false);
  });

  it("polls on the configured interval after start", async () => {
    const probe = scriptedProbe([true]);
    const monitor = new ConnectivityMonitor(probe, 1000);
    const target = new FakeTarget();

    monitor.start(target);
    await vi.advanceTimersByTimeAsync(0);
    expect(probe).toHaveBeenCalledTimes(1);

    await vi.advanceTimersByTimeAsync(3000);
    expect(probe).toHaveBeenCalledTimes(4);
    monitor.stop();
  });

  it("re-probes immediately on platform online/offline events", async () => {
    const probe = scriptedProbe([true, false]);
    const monitor = new ConnectivityMonitor(probe, 60_000);
    const target = new FakeTarget();
    const seen: boolean[] = [];
    monitor.onChange((online) => seen.push(online));

    monitor.start(target);
    await vi.advanceTimersByTimeAsync(0);
    expect(seen).toEqual([true]);

    target.emit("offline");
    await vi.advanceTimersByTimeAsync(0);
    expect(seen).toEqual([true, false]);
    monitor.stop();
  });

  it("stop removes listeners and halts polling", async () => {
    const probe = scriptedProbe([true]);
    const monitor = new ConnectivityMonitor(probe, 1000);
    const target = new FakeTarget();

    monitor.start(target);
    await vi.advanceTimersByTimeAsync(0);
    monitor.stop();

    expect(target.removeEventListener).toHaveBeenCalledWith("online", expect.any(Function));
    expect(target.removeEventListener).toHaveBeenCalledWith("offline", expect.any(Function));

    const calls = probe.mock.calls.length;
    await vi.advanceTimersByTimeAsync(5000);
    expect(probe).toHaveBeenCalledTimes(calls);
  });

  it("unsubscribe stops further notifications", async () => {
    const probe = scriptedProbe([true, false]);
    const monitor = new ConnectivityMonitor(probe, 1000);
    const seen: boolean[] = [];
    const unsubscribe = monitor.onChange((online) => seen.push(online));

    await monitor.check();
    unsubscribe();
    await monitor.check();
    expect(seen).toEqual([true]);
  });
});
