import type { HelloFrame, SafetyState, StateFrame } from "../src/protocol.js";

export function hello(spectator = false): HelloFrame {
  return {
    type: "hello",
    scales: {
      relative_motion: { min: -3, max: 3 },
      acceleration: { min: 0, max: 5 },
      comfort: { min: -3, max: 3 },
    },
    force_limit: 10,
    tick_rate: 1000,
    frame_hz: 30,
    spectator,
    trials_total: 30,
  };
}

export function state(
  safety: SafetyState,
  t = 0,
  phase = "idle",
  force: [number, number, number] = [0, 0, 0],
): StateFrame {
  return {
    type: "state",
    t,
    force,
    head: { pos: [0, 0, 0], quat: [0, 0, 0, 1] },
    safety,
    trial: { index: 0, phase },
    gain: 2,
    tick_us: 20,
  };
}
