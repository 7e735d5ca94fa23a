/**
 * Wire protocol of the session service: JSON text frames over WebSocket.
 *
 * Server -> client: one `hello` on connect (scale metadata, force limit,
 * role), then `state` frames at the snapshot rate and an `ack` per command.
 * Client -> server: `{type: "cmd", cmd, ...}`. The console never computes
 * forces; commands are requests, state frames are truth.
 */

export type SafetyState = "DISARMED" | "ARMED" | "ENGAGED" | "KILLED";

export interface ScaleMeta {
  min: number;
  max: number;
}

export interface HelloFrame {
  type: "hello";
  scales: Record<string, ScaleMeta>;
  force_limit: number;
  tick_rate: number;
  frame_hz: number;
  spectator: boolean;
  trials_total: number;
}

export interface StateFrame {
  type: "state";
  t: number;
  force: [number, number, number];
  head: { pos: number[]; quat: number[] };
  safety: SafetyState;
  trial: { index: number; phase: string };
  gain?: number;
  mode?: string;
  tick_us?: number;
  feed?: string;
}

export interface AckFrame {
  type: "ack";
  cmd?: string;
  ok: boolean;
  reason?: string;
}

export type ServerFrame = HelloFrame | StateFrame | AckFrame;

export type CommandName =
  | "kill"
  | "arm"
  | "engage"
  | "release"
  | "rearm"
  | "set_gain"
  | "start_trial"
  | "rate";

export interface Command {
  cmd: CommandName;
  value?: number;
  index?: number;
  ratings?: Record<string, number>;
}

const SAFETY_STATES = new Set(["DISARMED", "ARMED", "ENGAGED", "KILLED"]);

function isVec3(v: unknown): v is [number, number, number] {
  return Array.isArray(v) && v.length === 3 && v.every((c) => typeof c === "number");
}

/** Parse one server frame; null for anything malformed (never throws). */
export function parseFrame(raw: string): ServerFrame | null {
  let msg: unknown;
  try {
    msg = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof msg !== "object" || msg === null) return null;
  const m = msg as Record<string, unknown>;
  if (m.type === "hello") {
    if (typeof m.force_limit !== "number" || typeof m.scales !== "object" || m.scales === null) {
      return null;
    }
    return m as unknown as HelloFrame;
  }
  if (m.type === "state") {
    if (typeof m.t !== "number" || !isVec3(m.force)) return null;
    if (typeof m.safety !== "string" || !SAFETY_STATES.has(m.safety)) return null;
    const head = m.head as Record<string, unknown> | undefined;
    if (!head || !Array.isArray(head.pos) || !Array.isArray(head.quat)) return null;
    const trial = m.trial as Record<string, unknown> | undefined;
    if (!trial || typeof trial.phase !== "string") return null;
    return m as unknown as StateFrame;
  }
  if (m.type === "ack") {
    if (typeof m.ok !== "boolean") return null;
    return m as unknown as AckFrame;
  }
  return null;
}

export function encodeCommand(command: Command): string {
  return JSON.stringify({ type: "cmd", ...command });
}
