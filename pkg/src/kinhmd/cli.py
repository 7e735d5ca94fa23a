"""Command-line entry points.

Subcommands:
  stimulus  emit the synthetic double-step trace to a CSV file
  run       drive the control loop from a stimulus, a trace, or live UDP
  trial     run a block-randomized rated session headlessly
  replay    inspect a device log export and re-check safety invariants
  serve     start the loop plus the WebSocket console service
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys

from . import config as cfgmod
from .device import DeviceLog
from .session import (
    CONDITIONS,
    RATING_SCALES,
    ScriptedResponder,
    SessionRuntime,
    ZeroSource,
    plan_trials,
    run_session,
    summarize,
    write_report,
)
from .stimulus import StimulusPattern, Trace, save_trace, synthesize_trace
from .vecmath import norm


def _load_cfg(args) -> cfgmod.SessionConfig:
    cfg = cfgmod.load_config(args.config) if args.config else cfgmod.SessionConfig()
    return cfgmod.apply_overrides(
        cfg,
        source=getattr(args, "source", None),
        mode=getattr(args, "mode", None),
        gain=getattr(args, "gain", None),
        force_limit=getattr(args, "limit", None),
        jerk_limit=getattr(args, "jerk_limit", None),
        trace_path=getattr(args, "trace", None),
    )


class TerminalResponder:
    """Interactive responder prompting on stdin."""

    def validate_launch(self, trial_index: int, condition: str) -> None:
        input(f"trial {trial_index + 1}: press Enter to launch... ")

    def collect_ratings(self, trial_index: int, condition: str) -> dict:
        ratings = {}
        for name, (lo, hi) in RATING_SCALES.items():
            while True:
                raw = input(f"  {name} [{lo}..{hi}]: ").strip()
                try:
                    v = int(raw)
                except ValueError:
                    print("  integer required")
                    continue
                if lo <= v <= hi:
                    ratings[name] = v
                    break
                print(f"  value must be within [{lo}..{hi}]")
        return ratings


def cmd_stimulus(args) -> int:
    pattern = StimulusPattern(args.amplitude, args.plateau, args.ease)
    trace = synthesize_trace(pattern, args.rate)
    save_trace(trace, args.out)
    print(f"wrote {len(trace.samples)} samples ({pattern.total_duration:g} s at "
          f"{args.rate:g} Hz) to {args.out}")
    return 0


def cmd_run(args) -> int:
    cfg = _load_cfg(args)
    runtime = SessionRuntime(cfg)
    if args.record:
        runtime.record_inputs = []
    runtime.engage()
    n = math.ceil(args.duration * cfg.tick_rate)
    faulted = False
    try:
        runtime.run_ticks(n, realtime=args.realtime)
    except Exception as exc:
        # killed already; keep going so the partial log still gets flushed
        faulted = True
        print(f"session aborted: {exc}", file=sys.stderr)
    timing = runtime.timing()
    forces = runtime.device.log.applied_forces()
    peak = max((norm(f) for f in forces), default=0.0)
    print(f"ran {timing.ticks} ticks at {cfg.tick_rate:g} Hz "
          f"(source {cfg.source}, mode {cfg.cueing.mode}, gain {cfg.cueing.gain:g})")
    print(f"peak |force| {peak:.3f} N, mean tick {timing.mean_us:.1f} us, "
          f"max {timing.max_us:.1f} us, overruns {timing.overruns} "
          f"({100 * timing.overrun_ratio:.2f}%)")
    if timing.overrun_warning:
        print("WARNING: overrun ratio above 5%", file=sys.stderr)
    out = args.log_out or cfg.log_path
    if out:
        runtime.device.log.export_jsonl(out)
        print(f"device log: {out}")
    if args.record and runtime.record_inputs:
        rate = cfg.tick_rate
        save_trace(Trace(tuple(runtime.record_inputs), rate, "recorded"), args.record)
        print(f"recorded input trace: {args.record}")
    return 1 if faulted else 0


def cmd_trial(args) -> int:
    cfg = _load_cfg(args)
    plan = plan_trials(CONDITIONS, reps=args.reps, seed=args.seed,
                       block_randomized=not args.full_shuffle)
    responder = ScriptedResponder() if args.scripted else TerminalResponder()
    records = run_session(cfg, plan, responder)
    rated = [r for r in records if not r.cancelled]
    print(f"completed {len(records)} trials ({len(rated)} rated)")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            for r in records:
                f.write(json.dumps(r.to_json()) + "\n")
        print(f"records: {args.out}")
    if rated:
        summary = summarize(records)
        write_report(summary, text_path=args.report, json_path=args.report_json)
        if args.report:
            print(f"report: {args.report}")
        if args.report_json:
            print(f"quartiles: {args.report_json}")
    return 0


def cmd_replay(args) -> int:
    records = DeviceLog.load_jsonl(args.log)
    if not records:
        print("log is empty", file=sys.stderr)
        return 1
    peak_f = 0.0
    peak_lean = 0.0
    violations = 0
    cylinder_ticks = 0
    for rec in records:
        f = norm((rec["fx"], rec["fy"], rec["fz"]))
        peak_f = max(peak_f, f)
        if f > args.limit + 1e-9:
            violations += 1
        peak_lean = max(peak_lean, norm((rec["px"], rec["py"], rec["pz"])))
        if rec.get("tq_mode") == "cylinder_joint":
            cylinder_ticks += 1
    t0, t1 = records[0]["t"], records[-1]["t"]
    print(f"{len(records)} ticks over {t1 - t0:.3f} s")
    print(f"peak |force| {peak_f:.3f} N (limit {args.limit:g} N, "
          f"{violations} violation{'s' if violations != 1 else ''})")
    print(f"peak lean {1000 * peak_lean:.1f} mm")
    print(f"cylinder-joint ticks {cylinder_ticks} "
          f"({100 * cylinder_ticks / len(records):.1f}%)")
    return 1 if violations else 0


def cmd_serve(args) -> int:
    from .service import serve_forever

    cfg = _load_cfg(args)
    plan = plan_trials(CONDITIONS, reps=args.reps, seed=args.seed)
    source = ZeroSource() if cfg.source == cfgmod.SOURCE_SYNTHETIC_STIMULUS else None
    runtime = SessionRuntime(cfg, source=source, plan=plan, keep_log=False)
    serve_forever(runtime, host=args.host, port=args.port, realtime=not args.no_pace)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kinhmd",
                                description="head-based force-feedback motion cueing engine")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("stimulus", help="emit the synthetic stimulus trace")
    sp.add_argument("--out", required=True, help="output CSV path")
    sp.add_argument("--rate", type=float, default=1000.0, help="sample rate Hz (default 1000)")
    sp.add_argument("--amplitude", type=float, default=5.0, help="step amplitude m/s^2")
    sp.add_argument("--plateau", type=float, default=4.0, help="plateau seconds")
    sp.add_argument("--ease", type=float, default=0.5, help="ease ramp seconds")
    sp.set_defaults(func=cmd_stimulus)

    rp = sub.add_parser("run", help="drive the control loop")
    rp.add_argument("--config", help="YAML config file")
    rp.add_argument("--source", choices=["udp", "trace", "stimulus"])
    rp.add_argument("--mode", choices=["direct", "indirect", "none"])
    rp.add_argument("--gain", type=float, help="N per m/s^2")
    rp.add_argument("--duration", type=float, default=10.0, help="seconds (default 10)")
    rp.add_argument("--limit", type=float, help="force limit N")
    rp.add_argument("--jerk-limit", type=float, help="jerk limit N/s")
    rp.add_argument("--trace", help="trace CSV for --source trace")
    rp.add_argument("--log-out", help="device log JSONL output (.gz ok)")
    rp.add_argument("--record", help="record received accelerations to a trace CSV")
    rp.add_argument("--realtime", action="store_true", help="pace to the wall clock")
    rp.set_defaults(func=cmd_run)

    tp = sub.add_parser("trial", help="run a rated trial session")
    tp.add_argument("--config", help="YAML config file")
    tp.add_argument("--reps", type=int, default=10, help="repetitions per condition")
    tp.add_argument("--seed", type=int, default=0)
    tp.add_argument("--full-shuffle", action="store_true",
                    help="single full shuffle instead of block randomization")
    tp.add_argument("--scripted", action="store_true", help="scripted responder (no prompts)")
    tp.add_argument("--out", help="trial records JSONL output")
    tp.add_argument("--report", help="human-readable summary path")
    tp.add_argument("--report-json", help="per-condition quartiles JSON path")
    tp.set_defaults(func=cmd_trial)

    pp = sub.add_parser("replay", help="inspect a device log export")
    pp.add_argument("--log", required=True, help="device log JSONL (.gz ok)")
    pp.add_argument("--limit", type=float, default=10.0, help="force limit to check against")
    pp.set_defaults(func=cmd_replay)

    vp = sub.add_parser("serve", help="run loop + console WebSocket service")
    vp.add_argument("--config", help="YAML config file")
    vp.add_argument("--host", default="127.0.0.1")
    vp.add_argument("--port", type=int, default=8765)
    vp.add_argument("--source", choices=["udp", "trace", "stimulus"])
    vp.add_argument("--trace", help="trace CSV for --source trace")
    vp.add_argument("--mode", choices=["direct", "indirect", "none"])
    vp.add_argument("--gain", type=float, help="N per m/s^2")
    vp.add_argument("--limit", type=float, help="force limit N")
    vp.add_argument("--jerk-limit", type=float, help="jerk limit N/s")
    vp.add_argument("--reps", type=int, default=10)
    vp.add_argument("--seed", type=int, default=0)
    vp.add_argument("--no-pace", action="store_true",
                    help="run the loop unpaced (testing only)")
    vp.set_defaults(func=cmd_serve)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
