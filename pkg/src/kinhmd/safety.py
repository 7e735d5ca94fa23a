"""Safety stack: force clamp, jerk limiting, staleness fade, kill switch, calibration.

Force output is permitted only while the kill switch is ENGAGED (operator
or wearer actively holding it). A kill latches: everything stops within
one control tick, no fade, and only an explicit rearm leaves the KILLED
state. Telemetry loss and disengagement fade out smoothly instead, since
an instant drop is itself a jerk hazard.

The 10 N default ceiling is an order of magnitude below a conservative
100 N reference for healthy adult neck loading; per-user gain calibration
narrows it further.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass

from .stimulus import ConfigError
from .vecmath import ZERO3, Vec3, add, is_finite, norm, scale, sub

log = logging.getLogger(__name__)

PHYSIOLOGICAL_REFERENCE_N = 100.0
DEFAULT_FORCE_LIMIT_N = 10.0
# Reaches the default 10 N ceiling in 50 ms: fast enough for swift
# turbulence content while excluding step discontinuities. Tunable.
DEFAULT_JERK_LIMIT_N_PER_S = 200.0
DEFAULT_FADE_S = 0.25


class HardFault(RuntimeError):
    """Non-finite value on the force path; output is zeroed and the switch killed."""


class KillState(str, enum.Enum):
    DISARMED = "DISARMED"
    ARMED = "ARMED"
    ENGAGED = "ENGAGED"
    KILLED = "KILLED"


EVENT_ARM = "arm"
EVENT_ENGAGE = "engage"
EVENT_RELEASE = "release"
EVENT_KILL = "kill"
EVENT_REARM = "rearm"
KILL_EVENTS = (EVENT_ARM, EVENT_ENGAGE, EVENT_RELEASE, EVENT_KILL, EVENT_REARM)

# Full transition table; anything absent is a no-op. kill is accepted from
# every state and KILLED is absorbing except for the explicit rearm.
_TRANSITIONS: dict[tuple[KillState, str], KillState] = {
    (KillState.DISARMED, EVENT_ARM): KillState.ARMED,
    (KillState.ARMED, EVENT_ENGAGE): KillState.ENGAGED,
    (KillState.ENGAGED, EVENT_RELEASE): KillState.ARMED,
    (KillState.DISARMED, EVENT_KILL): KillState.KILLED,
    (KillState.ARMED, EVENT_KILL): KillState.KILLED,
    (KillState.ENGAGED, EVENT_KILL): KillState.KILLED,
    (KillState.KILLED, EVENT_KILL): KillState.KILLED,
    (KillState.KILLED, EVENT_REARM): KillState.DISARMED,
}


@dataclass(frozen=True)
class SafetyConfig:
    force_limit: float = DEFAULT_FORCE_LIMIT_N          # N
    jerk_limit: float = DEFAULT_JERK_LIMIT_N_PER_S      # N/s
    fade_duration: float = DEFAULT_FADE_S               # s
    physiological_reference: float = PHYSIOLOGICAL_REFERENCE_N  # N, documentation constant

    def __post_init__(self):
        if not (0.0 < self.force_limit <= self.physiological_reference / 2.0):
            raise ConfigError(
                f"force_limit must be in (0, {self.physiological_reference / 2.0}] N, "
                f"got {self.force_limit}"
            )
        if not (self.jerk_limit > 0.0):
            raise ConfigError(f"jerk_limit must be > 0, got {self.jerk_limit}")
        if self.fade_duration < 0.0:
            raise ConfigError(f"fade_duration must be >= 0, got {self.fade_duration}")


@dataclass(frozen=True)
class KillSwitch:
    state: KillState = KillState.DISARMED
    last_transition: float = 0.0


def kill_transition(ks: KillSwitch, event: str, now: float) -> KillSwitch:
    """Apply one event; undefined (state, event) pairs are logged no-ops."""
    nxt = _TRANSITIONS.get((ks.state, event))
    if nxt is None:
        if event not in KILL_EVENTS:
            log.warning("unknown kill-switch event %r ignored", event)
        else:
            log.debug("kill-switch event %r ignored in state %s", event, ks.state.value)
        return ks
    if nxt == ks.state:
        return ks
    return KillSwitch(nxt, now)


def clamp_force(f: Vec3, limit: float) -> Vec3:
    """Radial clamp onto the force ball; direction is preserved.

    Per-axis clipping would bend the cue direction, so the whole vector is
    rescaled. Non-finite input is a HardFault.
    """
    if not is_finite(f):
        raise HardFault(f"non-finite force {f}")
    n = norm(f)
    if n <= limit:
        return f
    return scale(f, limit / n)


def limit_jerk(prev: Vec3, requested: Vec3, jerk_limit: float, dt: float) -> Vec3:
    """Move from prev toward requested by at most jerk_limit*dt (Euclidean)."""
    step = jerk_limit * dt
    delta = sub(requested, prev)
    d = norm(delta)
    if d <= step:
        return requested
    return add(prev, scale(delta, step / d))


@dataclass(frozen=True)
class FadeState:
    """Progress of a fade-to-zero (staleness or disengage)."""

    fade_from: Vec3 = ZERO3
    elapsed: float = 0.0
    active: bool = False


def gate_output(
    state: KillState,
    f: Vec3,
    fade: FadeState,
    fade_duration: float,
    dt: float,
    feed_live: bool = True,
) -> tuple[Vec3, FadeState]:
    """Kill-switch gate: pass, fade, or zero; returns (output, fade state).

    ENGAGED with live telemetry passes f through. ENGAGED-but-stale and the
    non-killed idle states fade linearly from the last healthy output to
    exactly zero over fade_duration (an ongoing fade continues rather than
    restarting). KILLED zeroes output immediately, no fade.
    """
    if state == KillState.KILLED:
        return ZERO3, FadeState()
    if state == KillState.ENGAGED and feed_live:
        return f, FadeState()
    if not fade.active:
        fade = FadeState(fade_from=fade.fade_from, elapsed=0.0, active=True)
    elapsed = fade.elapsed + dt
    if fade_duration <= 0.0 or elapsed >= fade_duration:
        return ZERO3, FadeState(fade_from=ZERO3, elapsed=elapsed, active=True)
    out = scale(fade.fade_from, 1.0 - elapsed / fade_duration)
    return out, FadeState(fade_from=fade.fade_from, elapsed=elapsed, active=True)


class SafetyChain:
    """Stateful per-tick pipeline: clamp -> jerk limit -> kill gate.

    Owns the kill-switch state and the memory the jerk limiter and fade
    need (the last emitted force). Kill events may arrive from any thread
    via a latch the loop drains each tick; everything else is owned by the
    control loop.
    """

    def __init__(self, cfg: SafetyConfig, now: float = 0.0):
        self.cfg = cfg
        self.killswitch = KillSwitch(last_transition=now)
        self.last_emitted: Vec3 = ZERO3
        self._fade = FadeState()
        self._now = now
        self.hard_faulted = False

    @property
    def state(self) -> KillState:
        return self.killswitch.state

    def handle_event(self, event: str, now: float | None = None) -> KillState:
        if now is not None:
            self._now = now
        self.killswitch = kill_transition(self.killswitch, event, self._now)
        return self.killswitch.state

    def hard_fault(self, reason: str) -> None:
        log.error("hard fault: %s", reason)
        self.hard_faulted = True
        self.handle_event(EVENT_KILL)

    def process(self, requested: Vec3, dt: float, now: float | None = None, feed_live: bool = True) -> Vec3:
        """Run one force vector through the chain; always returns a command."""
        if now is not None:
            self._now = now
        else:
            self._now += dt
        if not is_finite(requested):
            self.hard_fault(f"non-finite requested force {requested}")
            requested = ZERO3
        if self.killswitch.state == KillState.KILLED:
            # Absorbing: exact zero within this very tick, fade memory wiped.
            self.last_emitted = ZERO3
            self._fade = FadeState()
            return ZERO3
        f = clamp_force(requested, self.cfg.force_limit)
        f = limit_jerk(self.last_emitted, f, self.cfg.jerk_limit, dt)
        if not self._fade.active:
            # Capture the fade start point before the gate decides.
            self._fade = FadeState(fade_from=self.last_emitted, elapsed=0.0, active=False)
        out, self._fade = gate_output(
            self.killswitch.state, f, self._fade, self.cfg.fade_duration, dt, feed_live
        )
        self.last_emitted = out
        return out


class ResponderTimeout(RuntimeError):
    """The interactive responder did not answer a calibration probe."""


@dataclass(frozen=True)
class CalibrationResult:
    user_id: str
    accepted_gain: float
    steps: tuple[tuple[float, bool], ...]
    aborted: bool = False


# Ascending staircase: 5 evenly spaced steps from 25% to 100% of the
# gain that puts the probe acceleration exactly at the force limit.
CALIBRATION_STEPS = 5
CALIBRATION_FLOOR_FRACTION = 0.25


def calibrate_gain(responder, cfg: SafetyConfig, probe_accel: float, user_id: str = "") -> CalibrationResult:
    """Pre-session staircase adapting the gain to the individual.

    ``responder.probe_gain(gain)`` must answer True (accept) or False
    (too strong) per step; it may raise ResponderTimeout. The staircase
    ascends from 25% of the maximum feasible gain and stops at the first
    rejection; the result is the highest accepted gain, or the lowest step
    if nothing was accepted. accepted_gain * probe_accel never exceeds the
    force limit.
    """
    if not (probe_accel > 0.0) or not math.isfinite(probe_accel):
        raise ConfigError(f"probe_accel must be finite and > 0, got {probe_accel}")
    g_max = cfg.force_limit / probe_accel
    span = 1.0 - CALIBRATION_FLOOR_FRACTION
    gains = [
        g_max * (CALIBRATION_FLOOR_FRACTION + span * i / (CALIBRATION_STEPS - 1))
        for i in range(CALIBRATION_STEPS)
    ]
    steps: list[tuple[float, bool]] = []
    accepted = gains[0]
    aborted = False
    for gain in gains:
        try:
            ok = bool(responder.probe_gain(gain))
        except ResponderTimeout:
            log.warning("calibration aborted: responder timeout at gain %.3f", gain)
            aborted = True
            break
        steps.append((gain, ok))
        if not ok:
            break
        accepted = gain
    if not steps:
        steps.append((gains[0], False))
    return CalibrationResult(user_id, accepted, tuple(steps), aborted)
