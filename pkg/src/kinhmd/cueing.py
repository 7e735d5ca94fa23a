"""Acceleration-to-force rendering laws, torque policy, and washout recentering.

Two rendering modes plus off:

* direct:   force = gain * acceleration (device pushes forward when the
            virtual vehicle speeds up, simulating physical acceleration)
* indirect: force = -gain * acceleration (device pulls backward when the
            vehicle speeds up, simulating the inertial body displacement)
* none:     zero force

Torque policy: below the force deadband the head is left torque-free;
above it, rotation is constrained to a virtual cylinder joint about the
force direction so counter torques are cancelled while the head can still
roll about the push axis.

The washout stage is an optional gated recentering spring, capped below a
perceptual-threshold force, active only after the input has been quiet for
a while. Default off: short stimuli inside a generous workspace don't need
it, but long interactive content does.
"""

from __future__ import annotations

from dataclasses import dataclass

from .stimulus import AccelerationSample, ConfigError
from .vecmath import ZERO3, Vec3, add, clamp_norm, neg, norm, normalized, scale

MODE_NONE = "none"
MODE_DIRECT = "direct"
MODE_INDIRECT = "indirect"
MODES = (MODE_NONE, MODE_DIRECT, MODE_INDIRECT)

DEFAULT_TORQUE_DEADBAND_N = 1.0

# Recentering cap default is a placeholder below any plausible perceptual
# threshold; it has not been validated against vestibular or proprioceptive
# detection data and should be tuned per deployment.
DEFAULT_RECENTER_CAP_N = 0.5


@dataclass(frozen=True)
class WashoutConfig:
    """Gated recentering spring pulling the head back to workspace center."""

    recenter_stiffness: float = 20.0     # N/m
    recenter_force_cap: float = DEFAULT_RECENTER_CAP_N  # N
    activation_delay: float = 1.0        # s of quiet input before engaging
    idle_accel_threshold: float = 0.05   # m/s^2

    def __post_init__(self):
        if not (self.recenter_force_cap > 0.0):
            raise ConfigError(f"recenter_force_cap must be > 0, got {self.recenter_force_cap}")
        if self.recenter_stiffness < 0.0:
            raise ConfigError(f"recenter_stiffness must be >= 0, got {self.recenter_stiffness}")
        if self.activation_delay < 0.0 or self.idle_accel_threshold < 0.0:
            raise ConfigError("activation_delay and idle_accel_threshold must be >= 0")


@dataclass(frozen=True)
class CueingConfig:
    """Rendering mode, gain and limits for the cueing stage.

    The default gain of 2 N per m/s^2 is an inference: it maps the default
    5 m/s^2 stimulus plateau onto the default 10 N force ceiling. It is not
    a measured value.
    """

    mode: str = MODE_NONE
    gain: float = 2.0                    # N per m/s^2
    torque_deadband: float = DEFAULT_TORQUE_DEADBAND_N  # N
    washout_enabled: bool = False
    washout: WashoutConfig = WashoutConfig()

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.gain < 0.0:
            raise ConfigError(f"gain must be >= 0, got {self.gain}")
        if not (self.torque_deadband > 0.0):
            raise ConfigError(f"torque_deadband must be > 0, got {self.torque_deadband}")


@dataclass(frozen=True)
class WrenchCommand:
    """Force plus torque policy for one control tick.

    torque_axis None means the head is rotation-free; otherwise it is the
    unit axis of the virtual cylinder joint (parallel to the applied force).
    """

    force: Vec3
    torque_axis: Vec3 | None
    timestamp: float

    @property
    def torque_mode(self) -> str:
        return "free" if self.torque_axis is None else "cylinder_joint"


def render_force(cfg: CueingConfig, sample: AccelerationSample) -> Vec3:
    """Rendering law before any safety processing."""
    if cfg.mode == MODE_DIRECT:
        return scale(sample.accel, cfg.gain)
    if cfg.mode == MODE_INDIRECT:
        return neg(scale(sample.accel, cfg.gain))
    return ZERO3


def torque_policy(force: Vec3, deadband: float) -> Vec3 | None:
    """Cylinder-joint axis for the commanded force, or None within the deadband.

    The boundary |force| == deadband stays free: torques engage only once
    the deadband is exceeded.
    """
    if norm(force) <= deadband:
        return None
    return normalized(force)


class Washout:
    """Recentering stage; owns the quiet-input timer between ticks."""

    def __init__(self, cfg: WashoutConfig):
        self.cfg = cfg
        self._idle_s = 0.0

    def reset(self) -> None:
        self._idle_s = 0.0

    def step(self, head_position: Vec3, input_accel: Vec3, dt: float) -> Vec3:
        """Additive recentering force for this tick (zero unless gated on).

        Zero while the input is active or the quiet timer is still below
        the activation delay; afterwards a spring toward workspace center,
        magnitude capped.
        """
        if norm(input_accel) >= self.cfg.idle_accel_threshold:
            self._idle_s = 0.0
            return ZERO3
        self._idle_s += dt
        if self._idle_s < self.cfg.activation_delay:
            return ZERO3
        pull = scale(head_position, -self.cfg.recenter_stiffness)
        return clamp_norm(pull, self.cfg.recenter_force_cap)


def cueing_tick(
    cfg: CueingConfig,
    washout: Washout,
    sample: AccelerationSample,
    head_position: Vec3,
    safety,
    dt: float,
    feed_live: bool = True,
) -> WrenchCommand:
    """One rendering tick: render, washout add, safety chain, torque policy.

    The pipeline order is fixed: render -> washout add -> force clamp ->
    jerk limit -> kill-switch gate -> torque policy. ``safety`` is the
    stateful chain applying the clamp/jerk/gate stages; the torque policy
    is evaluated on the post-safety force so the cylinder axis always
    matches what is actually commanded.
    """
    f = render_force(cfg, sample)
    if cfg.washout_enabled:
        f = add(f, washout.step(head_position, sample.accel, dt))
    f = safety.process(f, dt, feed_live=feed_live)
    return WrenchCommand(f, torque_policy(f, cfg.torque_deadband), sample.timestamp)
