/**
 * WebSocket client for the session service.
 *
 * The kill path is deliberately bare: killPointerDown() fires on pointer
 * press, synchronously, with no confirmation, no debounce and no queueing;
 * a failed send is retried once and then surfaced as a fault. Everything
 * else goes through send(), which resolves with the matching ack.
 */

import { encodeCommand, parseFrame, type Command } from "./protocol.js";
import type { ConsoleStore } from "./store.js";

/** Narrow shape satisfied both by the browser WebSocket and the ws package. */
export interface WebSocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
}

export interface ClientOptions {
  url: string;
  wsFactory?: (url: string) => WebSocketLike;
  staleAfterMs?: number;
  livenessIntervalMs?: number;
  now?: () => number;
  ackTimeoutMs?: number;
}

// Banner must show within 1 s of the feed stopping: threshold plus the
// liveness poll period stays under that with margin. 700 ms of silence is
// ~21 missed frames at 30 Hz, far beyond jitter.
const DEFAULT_STALE_AFTER_MS = 700;
const DEFAULT_LIVENESS_INTERVAL_MS = 150;

interface PendingAck {
  cmd: string;
  resolve: (ack: { ok: boolean; reason?: string; cmd?: string }) => void;
  timer: ReturnType<typeof setTimeout>;
}

export class ConsoleClient {
  private ws: WebSocketLike | null = null;
  private pending: PendingAck[] = [];
  private livenessTimer: ReturnType<typeof setInterval> | null = null;
  private readonly staleAfterMs: number;
  private readonly livenessIntervalMs: number;
  private readonly ackTimeoutMs: number;
  private readonly now: () => number;
  private readonly wsFactory: (url: string) => WebSocketLike;

  constructor(readonly store: ConsoleStore, private readonly opts: ClientOptions) {
    this.staleAfterMs = opts.staleAfterMs ?? DEFAULT_STALE_AFTER_MS;
    this.livenessIntervalMs = opts.livenessIntervalMs ?? DEFAULT_LIVENESS_INTERVAL_MS;
    this.ackTimeoutMs = opts.ackTimeoutMs ?? 5000;
    this.now = opts.now ?? (() => Date.now());
    this.wsFactory =
      opts.wsFactory ?? ((url) => new WebSocket(url) as unknown as WebSocketLike);
  }

  connect(): void {
    const ws = this.wsFactory(this.opts.url);
    this.ws = ws;
    ws.onopen = () => {
      this.store.lastFrameAt = this.now();
    };
    ws.onmessage = (ev) => this.handleMessage(String(ev.data));
    ws.onclose = () => {
      this.store.markDisconnected();
      this.stopLivenessTimer();
    };
    ws.onerror = () => {
      // onclose follows; nothing to do here
    };
    this.startLivenessTimer();
  }

  close(): void {
    this.stopLivenessTimer();
    this.ws?.close();
    this.ws = null;
  }

  private startLivenessTimer(): void {
    this.stopLivenessTimer();
    this.livenessTimer = setInterval(
      () => this.store.checkLiveness(this.now(), this.staleAfterMs),
      this.livenessIntervalMs,
    );
  }

  private stopLivenessTimer(): void {
    if (this.livenessTimer !== null) {
      clearInterval(this.livenessTimer);
      this.livenessTimer = null;
    }
  }

  private handleMessage(raw: string): void {
    const frame = parseFrame(raw);
    if (frame === null) return; // tolerate unknown frames
    if (frame.type === "hello") {
      this.store.applyHello(frame, this.now());
    } else if (frame.type === "state") {
      this.store.applyState(frame, this.now());
    } else {
      const waiting = this.pending.findIndex(
        (p) => p.cmd === frame.cmd || frame.cmd === undefined,
      );
      if (waiting >= 0) {
        const [p] = this.pending.splice(waiting, 1);
        clearTimeout(p!.timer);
        p!.resolve(frame);
      }
      this.store.applyAck(frame);
    }
  }

  /**
   * Kill on pointer press. Never queued, never confirmed, no debounce.
   * One retry on send failure, then the fault banner takes over.
   */
  killPointerDown(): void {
    for (let attempt = 0; attempt < 2; attempt++) {
      try {
        this.ws?.send(encodeCommand({ cmd: "kill" }));
        return;
      } catch {
        // fall through to retry once
      }
    }
    this.store.markKillFault();
  }

  /** Send any non-kill command; resolves with the matching ack. */
  send(command: Command): Promise<{ ok: boolean; reason?: string; cmd?: string }> {
    return new Promise((resolve) => {
      if (!this.ws) {
        resolve({ ok: false, reason: "not connected" });
        return;
      }
      const timer = setTimeout(() => {
        const i = this.pending.findIndex((p) => p.timer === timer);
        if (i >= 0) this.pending.splice(i, 1);
        resolve({ ok: false, reason: "ack timeout" });
      }, this.ackTimeoutMs);
      this.pending.push({ cmd: command.cmd, resolve, timer });
      try {
        this.ws.send(encodeCommand(command));
      } catch (err) {
        clearTimeout(timer);
        this.pending = this.pending.filter((p) => p.timer !== timer);
        resolve({ ok: false, reason: String(err) });
      }
    });
  }
}
