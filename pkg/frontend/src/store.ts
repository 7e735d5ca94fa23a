/**
 * Console state: connection, latest frames, bounded histories, and the
 * enable/disable rules for every control. One rule is absolute: the kill
 * control is available whenever the socket is up, regardless of any other
 * state. All other controls obey the safety state and the operator role.
 */

import { RingBuffer } from "./ringbuffer.js";
import type { AckFrame, HelloFrame, SafetyState, StateFrame } from "./protocol.js";

export type ConnectionStatus = "connecting" | "connected" | "stale" | "disconnected";

export interface ControlFlags {
  kill: boolean;
  arm: boolean;
  engage: boolean;
  release: boolean;
  rearm: boolean;
  setGain: boolean;
  startTrial: boolean;
  rate: boolean;
}

export interface HistorySample {
  t: number;
  value: number;
}

const HISTORY_CAPACITY = 600; // ~20 s at 30 Hz; old samples fall off

export class ConsoleStore {
  connection: ConnectionStatus = "connecting";
  hello: HelloFrame | null = null;
  latest: StateFrame | null = null;
  lastAck: AckFrame | null = null;
  killFault = false; // kill send failed twice; operator must act physically
  lastFrameAt = 0; // ms clock of the newest state frame
  framesSeen = 0;

  readonly forceHistory = new RingBuffer<HistorySample>(HISTORY_CAPACITY);
  readonly leanHistory = new RingBuffer<HistorySample>(HISTORY_CAPACITY);
  readonly tickUsHistory = new RingBuffer<number>(HISTORY_CAPACITY);

  private listeners = new Set<() => void>();

  subscribe(fn: () => void): () => void {
    this.listeners.add(fn);
    return () => this.listeners.delete(fn);
  }

  private emit(): void {
    for (const fn of this.listeners) fn();
  }

  get spectator(): boolean {
    return this.hello?.spectator ?? false;
  }

  get safety(): SafetyState | null {
    return this.latest?.safety ?? null;
  }

  get trialPhase(): string {
    return this.latest?.trial.phase ?? "idle";
  }

  applyHello(frame: HelloFrame, nowMs: number): void {
    this.hello = frame;
    this.connection = "connected";
    this.lastFrameAt = nowMs;
    this.emit();
  }

  applyState(frame: StateFrame, nowMs: number): void {
    this.latest = frame;
    this.lastFrameAt = nowMs;
    this.framesSeen += 1;
    if (this.connection === "connecting" || this.connection === "stale") {
      this.connection = "connected";
    }
    const f = frame.force;
    const mag = Math.sqrt(f[0] * f[0] + f[1] * f[1] + f[2] * f[2]);
    this.forceHistory.push({ t: frame.t, value: mag });
    const p = frame.head.pos;
    const lean = Math.sqrt((p[0] ?? 0) ** 2 + (p[1] ?? 0) ** 2 + (p[2] ?? 0) ** 2);
    this.leanHistory.push({ t: frame.t, value: lean });
    if (typeof frame.tick_us === "number") this.tickUsHistory.push(frame.tick_us);
    this.emit();
  }

  applyAck(frame: AckFrame): void {
    this.lastAck = frame;
    this.emit();
  }

  /** Called by the liveness timer; flips to stale after staleAfterMs of silence. */
  checkLiveness(nowMs: number, staleAfterMs: number): void {
    if (this.connection === "connected" && nowMs - this.lastFrameAt > staleAfterMs) {
      this.connection = "stale";
      this.emit();
    }
  }

  markDisconnected(): void {
    if (this.connection !== "disconnected") {
      this.connection = "disconnected";
      this.emit();
    }
  }

  markKillFault(): void {
    this.killFault = true;
    this.emit();
  }

  /** Prominent banner when the feed is cut or the socket is gone. */
  get bannerText(): string | null {
    if (this.connection === "disconnected") return "DISCONNECTED — no control";
    if (this.connection === "stale") return "STALE FEED — state frames stopped";
    return null;
  }

  /**
   * Per-control availability. Kill stays enabled while the socket is up, no
   * matter what; spectators get nothing else; KILLED leaves only rearm.
   */
  controls(): ControlFlags {
    const socketUp = this.connection === "connected" || this.connection === "stale";
    const none: ControlFlags = {
      kill: socketUp,
      arm: false,
      engage: false,
      release: false,
      rearm: false,
      setGain: false,
      startTrial: false,
      rate: false,
    };
    if (!socketUp || this.spectator) return none;
    const safety = this.safety;
    if (safety === "KILLED") return { ...none, rearm: true };
    return {
      ...none,
      arm: safety === "DISARMED",
      engage: safety === "ARMED",
      release: safety === "ENGAGED",
      rearm: false,
      setGain: true,
      startTrial: safety === "ENGAGED" && this.trialPhase === "idle",
      rate: this.trialPhase === "rating",
    };
  }

  /** Fraction of full scale for force display; saturates at the force limit. */
  forceFraction(component: number): number {
    const limit = this.hello?.force_limit ?? 10;
    const x = component / limit;
    return Math.max(-1, Math.min(1, x));
  }
}
