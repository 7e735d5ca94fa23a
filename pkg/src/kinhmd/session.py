"""Fixed-rate control loop, trial sequencing, and rating summaries.

One control loop owns the cueing, safety and plant state and ticks at the
configured rate: sample input -> render -> safety chain -> device -> log.
Telemetry and the console service live on other threads; everything that
crosses into the loop goes through four channels only: the latest-sample
mailbox, a latched kill flag, a bounded command queue drained between
ticks, and outbound state snapshots.

The trial sequencer reproduces a block-randomized protocol: per trial a
launch confirmation, a 1.5 s no-force target phase, a 10 s stimulus under
the trial's condition, then rating collection.
"""

from __future__ import annotations

import logging
import math
import queue
import random
import threading
import time
from dataclasses import dataclass, field, replace

from .config import (
    SOURCE_LIVE_UDP,
    SOURCE_SYNTHETIC_STIMULUS,
    SOURCE_TRACE_REPLAY,
    SessionConfig,
)
from .cueing import MODE_NONE, CueingConfig, Washout, WrenchCommand, cueing_tick
from .device import DeviceLog, SimulatedDevice
from .safety import (
    EVENT_ARM,
    EVENT_ENGAGE,
    EVENT_KILL,
    EVENT_REARM,
    EVENT_RELEASE,
    HardFault,
    KillState,
    SafetyChain,
)
from .stimulus import AccelerationSample, ConfigError, StimulusPattern, Trace, eval_pattern
from .telemetry import FEED_LIVE, UdpReceiver
from .vecmath import ZERO3, Vec3, norm

log = logging.getLogger(__name__)

H_NONE = "H_NONE"
H_DIRECT = "H_DIRECT"
H_INDIRECT = "H_INDIRECT"
CONDITIONS = (H_NONE, H_DIRECT, H_INDIRECT)
CONDITION_MODES = {H_NONE: "none", H_DIRECT: "direct", H_INDIRECT: "indirect"}

# Rating scales are artifact conventions (the protocol names the scales
# but not their ranges): relative motion negative = environment moving,
# positive = self moving.
RATING_SCALES = {
    "relative_motion": (-3, 3),
    "acceleration": (0, 5),
    "comfort": (-3, 3),
}

TARGET_PHASE_S = 1.5
STIMULUS_PHASE_S = 10.0

PHASE_IDLE = "idle"
PHASE_TARGET = "target"
PHASE_STIMULUS = "stimulus"
PHASE_RATING = "rating"

SNAPSHOT_RATE_HZ = 30.0
COMMAND_QUEUE_MAX = 256
OVERRUN_WARNING_RATIO = 0.05


class RatingError(ValueError):
    """Rating missing a dimension or outside its declared scale."""


def validate_ratings(ratings: dict) -> dict:
    out = {}
    for name, (lo, hi) in RATING_SCALES.items():
        if name not in ratings:
            raise RatingError(f"missing rating {name!r}")
        v = ratings[name]
        if not isinstance(v, int) or isinstance(v, bool) or not (lo <= v <= hi):
            raise RatingError(f"rating {name}={v!r} outside integer scale [{lo}, {hi}]")
        out[name] = v
    extra = set(ratings) - set(RATING_SCALES)
    if extra:
        raise RatingError(f"unknown rating dimensions {sorted(extra)}")
    return out


# ---------------------------------------------------------------------------
# Input sources. All expose sample(t) -> (accel, feed_live) with t in
# session seconds; feed_live False routes the safety chain into its fade.

class ZeroSource:
    def sample(self, t: float) -> tuple[Vec3, bool]:
        return ZERO3, True


class StimulusSource:
    """Plays a synthetic pattern starting at start_t; zero outside it."""

    def __init__(self, pattern: StimulusPattern, start_t: float = 0.0):
        self.pattern = pattern
        self.start_t = start_t

    def sample(self, t: float) -> tuple[Vec3, bool]:
        local = t - self.start_t
        if 0.0 <= local <= self.pattern.total_duration:
            return (eval_pattern(self.pattern, local), 0.0, 0.0), True
        return ZERO3, True


class TraceSource:
    """Linear interpolation over a trace (the future is known); endpoint hold."""

    def __init__(self, trace: Trace):
        self.samples = trace.samples
        self._cursor = 0

    def sample(self, t: float) -> tuple[Vec3, bool]:
        s = self.samples
        if t <= s[0].timestamp:
            return s[0].accel, True
        if t >= s[-1].timestamp:
            return s[-1].accel, True
        i = self._cursor
        if s[i].timestamp > t:  # non-monotone query, restart scan
            i = 0
        while s[i + 1].timestamp < t:
            i += 1
        self._cursor = i
        a, b = s[i], s[i + 1]
        # exact node hits return the sample bit-for-bit (replay equivalence)
        if t == a.timestamp:
            return a.accel, True
        if t == b.timestamp:
            return b.accel, True
        span = b.timestamp - a.timestamp
        w = 0.0 if span <= 0.0 else (t - a.timestamp) / span
        return (
            a.accel[0] + w * (b.accel[0] - a.accel[0]),
            a.accel[1] + w * (b.accel[1] - a.accel[1]),
            a.accel[2] + w * (b.accel[2] - a.accel[2]),
        ), True


class ZOHSource:
    """Zero-order hold over timestamped samples (live semantics, scripted feed).

    Holds the newest sample at or before t; with a staleness timeout the
    feed reads stale once t runs past the last sample by more than the
    timeout, exactly like a cut UDP feed.
    """

    def __init__(self, samples, staleness_timeout: float | None = None):
        self.samples = tuple(samples)
        self.staleness_timeout = staleness_timeout
        self._cursor = -1

    def sample(self, t: float) -> tuple[Vec3, bool]:
        s = self.samples
        i = self._cursor
        if i >= 0 and s[i].timestamp > t:
            i = -1
        while i + 1 < len(s) and s[i + 1].timestamp <= t:
            i += 1
        self._cursor = i
        if i < 0:
            return ZERO3, self.staleness_timeout is None
        live = True
        if self.staleness_timeout is not None:
            live = (t - s[i].timestamp) <= self.staleness_timeout
        return s[i].accel, live


class LiveUdpSource:
    """Latest-sample mailbox reader backed by the UDP receiver thread."""

    def __init__(self, receiver: UdpReceiver):
        self.receiver = receiver

    def sample(self, t: float) -> tuple[Vec3, bool]:
        latest = self.receiver.latest()
        live = self.receiver.status().state == FEED_LIVE
        return (latest.accel if latest is not None else ZERO3), live


def make_source(cfg: SessionConfig, receiver: UdpReceiver | None = None):
    if cfg.source == SOURCE_SYNTHETIC_STIMULUS:
        return StimulusSource(cfg.stimulus)
    if cfg.source == SOURCE_TRACE_REPLAY:
        from .stimulus import load_trace

        return TraceSource(load_trace(cfg.trace_path))
    if cfg.source == SOURCE_LIVE_UDP:
        if receiver is None:
            receiver = UdpReceiver(
                cfg.telemetry.channel_map(),
                port=cfg.telemetry.port,
                host=cfg.telemetry.host,
                staleness_timeout=cfg.telemetry.staleness_timeout_s,
            )
            receiver.start()
        return LiveUdpSource(receiver)
    raise ConfigError(f"unknown source {cfg.source!r}")


# ---------------------------------------------------------------------------
# Trial planning.

@dataclass(frozen=True)
class TrialPlan:
    conditions: tuple[str, ...]
    reps_per_condition: int
    seed: int
    block_randomized: bool
    order: tuple[str, ...]


def plan_trials(conditions=CONDITIONS, reps: int = 10, seed: int = 0,
                block_randomized: bool = True) -> TrialPlan:
    """Deterministic trial order for the given seed.

    Block mode (default) shuffles within consecutive blocks so every block
    of len(conditions) trials contains each condition exactly once; the
    alternative is a single full shuffle of the whole list.
    """
    conditions = tuple(conditions)
    if not conditions:
        raise ConfigError("conditions must be non-empty")
    if reps < 1:
        raise ConfigError(f"reps must be >= 1, got {reps}")
    rng = random.Random(seed)
    order: list[str] = []
    if block_randomized:
        for _ in range(reps):
            block = list(conditions)
            rng.shuffle(block)
            order.extend(block)
    else:
        order = list(conditions) * reps
        rng.shuffle(order)
    return TrialPlan(conditions, reps, seed, block_randomized, tuple(order))


@dataclass
class TrialRecord:
    trial_index: int
    condition: str
    target_phase_duration: float = TARGET_PHASE_S
    stimulus_duration: float = STIMULUS_PHASE_S
    ratings: dict | None = None
    lean_peak: float = 0.0
    cancelled: bool = False
    timestamps: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "trial_index": self.trial_index,
            "condition": self.condition,
            "target_phase_duration": self.target_phase_duration,
            "stimulus_duration": self.stimulus_duration,
            "ratings": self.ratings,
            "lean_peak": self.lean_peak,
            "cancelled": self.cancelled,
            "timestamps": self.timestamps,
        }


class ScriptedResponder:
    """Headless responder: fixed or callable answers for launch and ratings."""

    def __init__(self, ratings=None, gain_accepts: int | None = None):
        self.ratings = ratings or {"relative_motion": 1, "acceleration": 2, "comfort": 1}
        self.gain_accepts = gain_accepts
        self._probes = 0

    def validate_launch(self, trial_index: int, condition: str) -> None:
        return None

    def collect_ratings(self, trial_index: int, condition: str) -> dict:
        if callable(self.ratings):
            return self.ratings(trial_index, condition)
        return dict(self.ratings)

    def probe_gain(self, gain: float) -> bool:
        self._probes += 1
        if self.gain_accepts is None:
            return True
        return self._probes <= self.gain_accepts


# ---------------------------------------------------------------------------
# The control loop runtime.

@dataclass(frozen=True)
class TimingStats:
    ticks: int
    mean_us: float
    max_us: float
    overruns: int

    @property
    def overrun_ratio(self) -> float:
        return self.overruns / self.ticks if self.ticks else 0.0

    @property
    def overrun_warning(self) -> bool:
        return self.overrun_ratio > OVERRUN_WARNING_RATIO


@dataclass
class RunResult:
    log: DeviceLog | None
    timing: TimingStats
    events: list
    head_state: object
    records: list


class SessionRuntime:
    """Owns one session's cueing, safety, plant and trial state.

    tick() is the only mutator of loop state and must stay on a single
    thread; submit()/kill() are the thread-safe entry points for everything
    else.
    """

    def __init__(self, cfg: SessionConfig, source=None, device: SimulatedDevice | None = None,
                 keep_log: bool = True, plan: TrialPlan | None = None,
                 max_gain: float | None = None):
        self.cfg = cfg
        self.dt = cfg.tick_dt
        self.cueing_cfg: CueingConfig = cfg.cueing
        self._base_mode = cfg.cueing.mode
        self.washout = Washout(cfg.cueing.washout)
        self.chain = SafetyChain(cfg.safety)
        self.source = source if source is not None else make_source(cfg)
        self.device = device if device is not None else SimulatedDevice(
            cfg.plant, cfg.tick_dt, keep_log=keep_log
        )
        self.plan = plan
        self.max_gain = max_gain if max_gain is not None else (
            cfg.safety.force_limit / cfg.stimulus.step_amplitude
        )
        self.tick_index = 0
        self.events: list[tuple[float, str, str]] = []
        self.records: list[TrialRecord] = []
        self.last_command: WrenchCommand = WrenchCommand(ZERO3, None, 0.0)
        self.record_inputs: list[AccelerationSample] | None = None

        self._kill_latch = threading.Event()
        self._commands: queue.Queue = queue.Queue(maxsize=COMMAND_QUEUE_MAX)
        self._snapshot: dict | None = None
        self._snapshot_every = max(1, round(cfg.tick_rate / SNAPSHOT_RATE_HZ))
        self._tick_us_sum = 0.0
        self._tick_us_max = 0.0
        self._tick_us_last = 0.0
        self._overruns = 0

        # Trial phase machine.
        self.trial_phase = PHASE_IDLE
        self._trial_index: int | None = None
        self._trial_condition: str | None = None
        self._trial_ticks_left = 0
        self._trial_source: StimulusSource | None = None
        self._trial_lean_peak = 0.0
        self._trial_timestamps: dict = {}
        self._target_ticks = math.ceil(TARGET_PHASE_S * cfg.tick_rate)
        self._stimulus_ticks = math.ceil(STIMULUS_PHASE_S * cfg.tick_rate)

    # -- thread-safe operator surface ------------------------------------

    def kill(self) -> None:
        """Latch a kill; applied at the very next tick, never lost."""
        self._kill_latch.set()

    def submit(self, command: dict) -> tuple[bool, str]:
        """Queue an operator command (drained between ticks)."""
        cmd = command.get("cmd")
        if cmd == "kill":
            self.kill()
            return True, "kill latched"
        try:
            self._commands.put_nowait(command)
        except queue.Full:
            return False, "command queue full"
        return True, "queued"

    def submit_wait(self, command: dict, timeout: float = 1.0) -> tuple[bool, str]:
        """Queue a command and block until the loop has applied it.

        Kill is never made to wait: it is latched and reported immediately.
        """
        if command.get("cmd") == "kill":
            self.kill()
            return True, "kill latched"
        done = threading.Event()
        box: dict = {}
        tracked = dict(command)
        tracked["_done"] = done
        tracked["_result"] = box
        ok, reason = self.submit(tracked)
        if not ok:
            return ok, reason
        if not done.wait(timeout):
            return False, "control loop did not process the command in time"
        return box["ok"], box["reason"]

    def snapshot(self) -> dict | None:
        return self._snapshot

    # -- loop-thread surface ----------------------------------------------

    @property
    def now(self) -> float:
        # i / rate, not i * dt: bit-identical to trace timestamps sampled
        # on the same grid, and no accumulated drift.
        return self.tick_index / self.cfg.tick_rate

    def handle_event(self, event: str) -> None:
        before = self.chain.state
        after = self.chain.handle_event(event, self.now)
        if after != before:
            self.events.append((self.now, event, after.value))

    def engage(self) -> None:
        self.handle_event(EVENT_ARM)
        self.handle_event(EVENT_ENGAGE)

    def set_gain(self, gain: float) -> float:
        applied = min(max(0.0, float(gain)), self.max_gain)
        self.cueing_cfg = replace(self.cueing_cfg, gain=applied)
        return applied

    def set_mode(self, mode: str) -> None:
        self.cueing_cfg = replace(self.cueing_cfg, mode=mode)

    def start_trial(self, index: int | None = None) -> tuple[bool, str]:
        if self.plan is None:
            return False, "no trial plan loaded"
        if self.trial_phase not in (PHASE_IDLE,):
            return False, f"trial already active (phase {self.trial_phase})"
        if index is None:
            index = len(self.records)
        if not (0 <= index < len(self.plan.order)):
            return False, f"trial index {index} outside plan of {len(self.plan.order)}"
        if self.chain.state != KillState.ENGAGED:
            return False, f"kill switch must be ENGAGED to start (is {self.chain.state.value})"
        self._trial_index = index
        self._trial_condition = self.plan.order[index]
        self.trial_phase = PHASE_TARGET
        self._trial_ticks_left = self._target_ticks
        self._trial_source = None
        self._trial_lean_peak = 0.0
        self._trial_timestamps = {"launched": self.now, "wall_launched": time.time()}
        self.set_mode(MODE_NONE)
        return True, f"trial {index} ({self._trial_condition}) launched"

    def submit_rating(self, ratings: dict) -> tuple[bool, str]:
        if self.trial_phase != PHASE_RATING:
            return False, f"no trial awaiting rating (phase {self.trial_phase})"
        try:
            clean = validate_ratings(ratings)
        except RatingError as exc:
            return False, str(exc)
        self._finish_trial(ratings=clean, cancelled=False)
        return True, "rating recorded"

    def _finish_trial(self, ratings: dict | None, cancelled: bool) -> TrialRecord:
        self._trial_timestamps["finished"] = self.now
        rec = TrialRecord(
            trial_index=self._trial_index,
            condition=self._trial_condition,
            ratings=ratings,
            lean_peak=self._trial_lean_peak,
            cancelled=cancelled,
            timestamps=dict(self._trial_timestamps),
        )
        self.records.append(rec)
        self.trial_phase = PHASE_IDLE
        self._trial_index = None
        self._trial_condition = None
        self._trial_source = None
        self.set_mode(MODE_NONE)
        return rec

    def _drain_commands(self) -> None:
        while True:
            try:
                c = self._commands.get_nowait()
            except queue.Empty:
                return
            ok, reason = self.apply_command(c)
            if "_done" in c:
                c["_result"]["ok"] = ok
                c["_result"]["reason"] = reason
                c["_done"].set()

    def apply_command(self, command: dict) -> tuple[bool, str]:
        """Apply one operator command on the loop thread."""
        cmd = command.get("cmd")
        if cmd == "kill":
            self.handle_event(EVENT_KILL)
            return True, "killed"
        if cmd in (EVENT_ARM, EVENT_ENGAGE, EVENT_RELEASE, EVENT_REARM):
            self.handle_event(cmd)
            return True, self.chain.state.value
        if cmd == "set_gain":
            try:
                applied = self.set_gain(float(command.get("value")))
            except (TypeError, ValueError):
                return False, "set_gain requires a numeric value"
            return True, f"gain {applied:g}"
        if cmd == "start_trial":
            return self.start_trial(command.get("index"))
        if cmd == "rate":
            return self.submit_rating(command.get("ratings") or {})
        return False, f"unknown command {cmd!r}"

    def _advance_trial_phase(self) -> None:
        if self.trial_phase == PHASE_TARGET:
            if self._trial_ticks_left <= 0:
                self.trial_phase = PHASE_STIMULUS
                self._trial_ticks_left = self._stimulus_ticks
                self._trial_source = StimulusSource(self.cfg.stimulus, start_t=self.now)
                self._trial_timestamps["stimulus_start"] = self.now
                self.set_mode(CONDITION_MODES[self._trial_condition])
        elif self.trial_phase == PHASE_STIMULUS:
            if self.chain.state == KillState.KILLED:
                # Security break: cancel, never rate. Forces are already zero.
                self._trial_timestamps["cancelled_at"] = self.now
                self._finish_trial(ratings=None, cancelled=True)
            elif self._trial_ticks_left <= 0:
                self._trial_timestamps["stimulus_end"] = self.now
                self.trial_phase = PHASE_RATING
                self.set_mode(MODE_NONE)

    def tick(self) -> WrenchCommand:
        """One control tick; returns the wrench commanded this tick."""
        started = time.perf_counter()
        t = self.now

        if self._kill_latch.is_set():
            self._kill_latch.clear()
            self.handle_event(EVENT_KILL)
        self._drain_commands()
        self._advance_trial_phase()

        if self.trial_phase in (PHASE_TARGET, PHASE_RATING):
            accel, feed_live = ZERO3, True
        elif self.trial_phase == PHASE_STIMULUS:
            accel, feed_live = self._trial_source.sample(t)
        else:
            accel, feed_live = self.source.sample(t)
        sample = AccelerationSample(t, accel)
        if self.record_inputs is not None:
            self.record_inputs.append(sample)

        head = self.device.state
        try:
            cmd = cueing_tick(
                self.cueing_cfg, self.washout, sample, head.position,
                self.chain, self.dt, feed_live=feed_live,
            )
            if not self.device.send(cmd):
                self.handle_event(EVENT_KILL)
                cmd = WrenchCommand(ZERO3, None, t)
                self.device.send(cmd)
            self.device.tick(t)
        except HardFault:
            self.handle_event(EVENT_KILL)
            raise
        finally:
            if self.trial_phase in (PHASE_TARGET, PHASE_STIMULUS):
                self._trial_ticks_left -= 1

        if self.trial_phase == PHASE_STIMULUS:
            r = norm(self.device.state.position)
            if r > self._trial_lean_peak:
                self._trial_lean_peak = r

        self.last_command = cmd
        self.tick_index += 1

        elapsed_us = (time.perf_counter() - started) * 1e6
        self._tick_us_sum += elapsed_us
        self._tick_us_last = elapsed_us
        if elapsed_us > self._tick_us_max:
            self._tick_us_max = elapsed_us
        if elapsed_us > self.dt * 1e6:
            self._overruns += 1
        if self.tick_index % self._snapshot_every == 0:
            self._publish_snapshot()
        return cmd

    def _publish_snapshot(self) -> None:
        s = self.device.state
        self._snapshot = {
            "type": "state",
            "t": self.now,
            "force": list(self.last_command.force),
            "head": {"pos": list(s.position), "quat": list(s.orientation)},
            "safety": self.chain.state.value,
            "trial": {
                "index": self._trial_index if self._trial_index is not None else len(self.records),
                "phase": self.trial_phase,
            },
            "gain": self.cueing_cfg.gain,
            "mode": self.cueing_cfg.mode,
            "tick_us": round(self._tick_us_last, 1),
            "feed": "live",
        }

    def timing(self) -> TimingStats:
        n = self.tick_index
        return TimingStats(
            ticks=n,
            mean_us=(self._tick_us_sum / n) if n else 0.0,
            max_us=self._tick_us_max,
            overruns=self._overruns,
        )

    def run_ticks(self, n: int, realtime: bool = False, on_tick=None) -> None:
        """Drive n ticks, optionally paced to the wall clock."""
        if realtime:
            t0 = time.perf_counter()
            base = self.tick_index
            for _ in range(n):
                cmd = self.tick()
                if on_tick is not None:
                    on_tick(self, cmd)
                deadline = t0 + (self.tick_index - base) * self.dt
                delay = deadline - time.perf_counter()
                if delay > 0:
                    time.sleep(delay)
        else:
            for _ in range(n):
                cmd = self.tick()
                if on_tick is not None:
                    on_tick(self, cmd)

    def run_until(self, stop: threading.Event, realtime: bool = True) -> None:
        """Tick until the stop event is set (service mode)."""
        t0 = time.perf_counter()
        base = self.tick_index
        while not stop.is_set():
            self.tick()
            if realtime:
                deadline = t0 + (self.tick_index - base) * self.dt
                delay = deadline - time.perf_counter()
                if delay > 0:
                    time.sleep(delay)
                elif delay < -1.0:
                    # Far behind (suspended process): rebase instead of spinning.
                    t0 = time.perf_counter()
                    base = self.tick_index


def run_loop(cfg: SessionConfig, duration: float, source=None, engage: bool = True,
             keep_log: bool = True, realtime: bool = False, on_tick=None) -> RunResult:
    """Run the loop for a duration and return the log, timing and events.

    Arms and engages the kill switch up front unless engage=False (then no
    force flows). A hard fault kills the session and re-raises after the
    partial log is preserved on the result.
    """
    runtime = SessionRuntime(cfg, source=source, keep_log=keep_log)
    if engage:
        runtime.engage()
    n = math.ceil(duration * cfg.tick_rate)
    try:
        runtime.run_ticks(n, realtime=realtime, on_tick=on_tick)
    except HardFault as exc:
        log.error("session aborted by hard fault: %s", exc)
    timing = runtime.timing()
    if timing.overrun_warning:
        log.warning(
            "overrun ratio %.1f%% exceeds %.0f%%",
            100.0 * timing.overrun_ratio, 100.0 * OVERRUN_WARNING_RATIO,
        )
    return RunResult(
        log=runtime.device.log,
        timing=timing,
        events=list(runtime.events),
        head_state=runtime.device.state,
        records=list(runtime.records),
    )


def run_trial(runtime: SessionRuntime, plan: TrialPlan, index: int, responder) -> TrialRecord:
    """Run one trial headlessly: launch wait, target, stimulus, ratings.

    The responder's validate_launch blocks until the participant confirms;
    collect_ratings supplies the three scale values. A kill during the
    stimulus cancels the trial (no ratings asked).
    """
    if runtime.plan is None:
        runtime.plan = plan
    condition = plan.order[index]
    responder.validate_launch(index, condition)
    ok, reason = runtime.start_trial(index)
    if not ok:
        raise RuntimeError(f"cannot start trial {index}: {reason}")
    while runtime.trial_phase in (PHASE_TARGET, PHASE_STIMULUS):
        runtime.tick()
    if runtime.trial_phase == PHASE_RATING:
        ratings = validate_ratings(responder.collect_ratings(index, condition))
        ok, reason = runtime.submit_rating(ratings)
        if not ok:
            raise RuntimeError(reason)
    return runtime.records[-1]


def run_session(cfg: SessionConfig, plan: TrialPlan, responder,
                runtime: SessionRuntime | None = None) -> list[TrialRecord]:
    """Run every trial of the plan in order; stops early if killed and not rearmed."""
    if runtime is None:
        runtime = SessionRuntime(cfg, source=ZeroSource(), plan=plan)
        runtime.engage()
    for index in range(len(plan.order)):
        if runtime.chain.state != KillState.ENGAGED:
            log.warning("session stopped at trial %d: kill switch %s",
                        index, runtime.chain.state.value)
            break
        run_trial(runtime, plan, index, responder)
    return list(runtime.records)


# ---------------------------------------------------------------------------
# Summaries.

def summarize(records) -> dict:
    """Per-condition descriptive stats of ratings; cancelled trials excluded.

    Returns {condition: {dimension: {median, q1, q3, min, max, n}}}.
    """
    import numpy as np

    rated = [r for r in records if not r.cancelled and r.ratings is not None]
    if not rated:
        raise ValueError("no rated trial records to summarize")
    out: dict = {}
    for cond in sorted({r.condition for r in rated}):
        per_dim = {}
        cond_records = [r for r in rated if r.condition == cond]
        for dim in RATING_SCALES:
            values = np.array([r.ratings[dim] for r in cond_records], dtype=float)
            q1, med, q3 = np.percentile(values, [25.0, 50.0, 75.0])
            per_dim[dim] = {
                "median": float(med), "q1": float(q1), "q3": float(q3),
                "min": float(values.min()), "max": float(values.max()),
                "n": int(values.size),
            }
        out[cond] = per_dim
    return out


def format_summary(summary: dict) -> str:
    lines = ["condition        dimension         median     q1     q3    min    max    n"]
    for cond, dims in summary.items():
        for dim, s in dims.items():
            lines.append(
                f"{cond:<16} {dim:<16} {s['median']:6.1f} {s['q1']:6.2f} "
                f"{s['q3']:6.2f} {s['min']:6.1f} {s['max']:6.1f} {s['n']:4d}"
            )
    return "\n".join(lines) + "\n"


def write_report(summary: dict, text_path=None, json_path=None) -> None:
    import json as _json

    if text_path is not None:
        with open(text_path, "w", encoding="utf-8") as f:
            f.write(format_summary(summary))
    if json_path is not None:
        with open(json_path, "w", encoding="utf-8") as f:
            _json.dump(summary, f, indent=2, sort_keys=True)
            f.write("\n")
