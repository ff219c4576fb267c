/** Connectivity tracking by probing the service, not by trusting the
 * platform's online flag. Browser online/offline events only trigger an
 * immediate re-probe; the probe result is what listeners see.
 */

export type ConnectivityListener = (online: boolean) => void;

type EventTargetLike = Pick<Window, "addEventListener" | "removeEventListener">;

export class ConnectivityMonitor {
  private state: boolean | null = null;
  private timer: ReturnType<typeof setInterval> | null = null;
  private listeners: ConnectivityListener[] = [];
  private probing = false;
  private target: EventTargetLike | null = null;

  constructor(
    private readonly probe: () => Promise<boolean>,
    private readonly intervalMs = 5000,
  ) {}

  get isOnline(): boolean {
    return this.state === true;
  }

  /** Subscribe to transitions; returns an unsubscribe function. */
  onChange(listener: ConnectivityListener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  /** Probe once. Overlapping checks collapse into the one in flight. */
  async check(): Promise<boolean> {
    if (this.probing) return this.isOnline;
    this.probing = true;
    try {
      const online = await this.probe().catch(() => false);
      if (this.state !== online) {
        this.state = online;
        for (const listener of [...this.listeners]) listener(online);
      }
      return online;
    } finally {
      this.probing = false;
    }
  }

  private readonly onPlatformEvent = (): void => {
    void this.check();
  };

  start(target: EventTargetLike): void {
    this.stop();
    this.target = target;
    target.addEventListener("online", this.onPlatformEvent);
    target.addEventListener("offline", this.onPlatformEvent);
    this.timer = setInterval(() => void this.check(), this.intervalMs);
    void this.check();
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
    if (this.target) {
      this.target.removeEventListener("online", this.onPlatformEvent);
      this.target.removeEventListener("offline", this.onPlatformEvent);
      this.target = null;
    }
  }
}
