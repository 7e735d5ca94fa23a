"""Session configuration: defaults, YAML/JSON file loading, CLI overrides.

Config files are nested mappings; dotted names in documentation
(``safety.force_limit_n``) refer to nested keys (``safety:
force_limit_n:``). Unknown keys are rejected to catch typos early.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import yaml

from .cueing import CueingConfig, WashoutConfig
from .device import PlantConfig, critical_damping
from .safety import SafetyConfig
from .stimulus import ConfigError, StimulusPattern
from .telemetry import ChannelMap, DEFAULT_PORT, DEFAULT_STALENESS_TIMEOUT_S

SOURCE_LIVE_UDP = "live_udp"
SOURCE_TRACE_REPLAY = "trace_replay"
SOURCE_SYNTHETIC_STIMULUS = "synthetic_stimulus"
SOURCES = (SOURCE_LIVE_UDP, SOURCE_TRACE_REPLAY, SOURCE_SYNTHETIC_STIMULUS)

# CLI shorthand for the source values.
SOURCE_ALIASES = {
    "udp": SOURCE_LIVE_UDP,
    "trace": SOURCE_TRACE_REPLAY,
    "stimulus": SOURCE_SYNTHETIC_STIMULUS,
}

MIN_TICK_RATE_HZ = 250.0
DEFAULT_TICK_RATE_HZ = 1000.0


@dataclass(frozen=True)
class TelemetryConfig:
    port: int = DEFAULT_PORT
    host: str = "127.0.0.1"
    record_index: int = 4
    slots: tuple[int, int, int] = (0, 1, 2)
    scale: float = 1.0
    staleness_timeout_s: float = DEFAULT_STALENESS_TIMEOUT_S

    def channel_map(self) -> ChannelMap:
        return ChannelMap(self.record_index, *self.slots, scale=self.scale)


@dataclass(frozen=True)
class SessionConfig:
    tick_rate: float = DEFAULT_TICK_RATE_HZ
    source: str = SOURCE_SYNTHETIC_STIMULUS
    trace_path: str | None = None
    log_path: str | None = None
    cueing: CueingConfig = CueingConfig()
    safety: SafetyConfig = SafetyConfig()
    plant: PlantConfig = PlantConfig()
    telemetry: TelemetryConfig = TelemetryConfig()
    stimulus: StimulusPattern = StimulusPattern()

    def __post_init__(self):
        if self.tick_rate < MIN_TICK_RATE_HZ:
            raise ConfigError(f"tick_rate must be >= {MIN_TICK_RATE_HZ} Hz, got {self.tick_rate}")
        if self.source not in SOURCES:
            raise ConfigError(f"source must be one of {SOURCES}, got {self.source!r}")
        if self.source == SOURCE_TRACE_REPLAY and not self.trace_path:
            raise ConfigError("trace_replay source requires trace_path")
        if self.cueing.washout.recenter_force_cap >= self.safety.force_limit:
            raise ConfigError(
                "washout recenter_force_cap must stay strictly below safety.force_limit"
            )

    @property
    def tick_dt(self) -> float:
        return 1.0 / self.tick_rate


def _take(section: dict, key: str, default):
    return section.pop(key, default)


def _reject_unknown(section: dict, name: str) -> None:
    if section:
        raise ConfigError(f"unknown {name} config keys: {sorted(section)}")


def from_mapping(data: dict) -> SessionConfig:
    """Build a SessionConfig from a nested mapping (already parsed YAML/JSON)."""
    data = dict(data or {})

    sess = dict(data.pop("session", {}))
    tick_rate = float(_take(sess, "tick_rate_hz", DEFAULT_TICK_RATE_HZ))
    source = str(_take(sess, "source", SOURCE_SYNTHETIC_STIMULUS))
    source = SOURCE_ALIASES.get(source, source)
    trace_path = _take(sess, "trace_path", None)
    log_path = _take(sess, "log_path", None)
    _reject_unknown(sess, "session")

    tel = dict(data.pop("telemetry", {}))
    telemetry = TelemetryConfig(
        port=int(_take(tel, "port", DEFAULT_PORT)),
        host=str(_take(tel, "host", "127.0.0.1")),
        record_index=int(_take(tel, "record_index", 4)),
        slots=tuple(int(s) for s in _take(tel, "slots", (0, 1, 2))),
        scale=float(_take(tel, "scale", 1.0)),
        staleness_timeout_s=float(_take(tel, "staleness_timeout_s", DEFAULT_STALENESS_TIMEOUT_S)),
    )
    _reject_unknown(tel, "telemetry")

    cue = dict(data.pop("cueing", {}))
    wash = dict(_take(cue, "washout", {}))
    washout = WashoutConfig(
        recenter_stiffness=float(_take(wash, "recenter_stiffness_n_per_m", 20.0)),
        recenter_force_cap=float(_take(wash, "recenter_force_cap_n", 0.5)),
        activation_delay=float(_take(wash, "activation_delay_s", 1.0)),
        idle_accel_threshold=float(_take(wash, "idle_accel_threshold", 0.05)),
    )
    washout_enabled = bool(_take(wash, "enabled", False))
    _reject_unknown(wash, "cueing.washout")
    cueing = CueingConfig(
        mode=str(_take(cue, "mode", "none")),
        gain=float(_take(cue, "gain", 2.0)),
        torque_deadband=float(_take(cue, "torque_deadband_n", 1.0)),
        washout_enabled=washout_enabled,
        washout=washout,
    )
    _reject_unknown(cue, "cueing")

    saf = dict(data.pop("safety", {}))
    safety = SafetyConfig(
        force_limit=float(_take(saf, "force_limit_n", 10.0)),
        jerk_limit=float(_take(saf, "jerk_limit_n_per_s", 200.0)),
        fade_duration=float(_take(saf, "fade_s", 0.25)),
    )
    _reject_unknown(saf, "safety")

    pl = dict(data.pop("plant", {}))
    mass = float(_take(pl, "head_mass_kg", 5.5))
    stiffness = float(_take(pl, "neck_stiffness_n_per_m", 300.0))
    plant = PlantConfig(
        head_mass=mass,
        neck_stiffness=stiffness,
        neck_damping=float(_take(pl, "neck_damping_n_s_per_m", critical_damping(stiffness, mass))),
        rot_stiffness=float(_take(pl, "rot_stiffness_nm_per_rad", 1.5)),
        rot_damping=float(_take(pl, "rot_damping_nm_s_per_rad", 0.3)),
        workspace_halfextents=tuple(
            float(v) for v in _take(pl, "workspace_halfextents_m", (0.65, 0.25, 0.5))
        ),
        integrator_dt=float(_take(pl, "integrator_dt_s", min(0.001, 1.0 / tick_rate))),
    )
    _reject_unknown(pl, "plant")

    st = dict(data.pop("stimulus", {}))
    stimulus = StimulusPattern(
        step_amplitude=float(_take(st, "step_amplitude_m_s2", 5.0)),
        plateau_duration=float(_take(st, "plateau_s", 4.0)),
        ease_duration=float(_take(st, "ease_s", 0.5)),
    )
    _reject_unknown(st, "stimulus")

    _reject_unknown(data, "top-level")
    return SessionConfig(
        tick_rate=tick_rate,
        source=source,
        trace_path=trace_path,
        log_path=log_path,
        cueing=cueing,
        safety=safety,
        plant=plant,
        telemetry=telemetry,
        stimulus=stimulus,
    )


def load_config(path) -> SessionConfig:
    """Load a YAML (or JSON) config file."""
    with open(path, "r", encoding="utf-8") as f:
        data = yaml.safe_load(f)
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return from_mapping(data)


def apply_overrides(cfg: SessionConfig, *, source=None, mode=None, gain=None,
                    force_limit=None, jerk_limit=None,
                    trace_path=None, tick_rate=None) -> SessionConfig:
    """CLI-style overrides on top of a loaded config; None leaves a field alone."""
    if mode is not None or gain is not None:
        cfg = replace(cfg, cueing=replace(
            cfg.cueing,
            mode=cfg.cueing.mode if mode is None else mode,
            gain=cfg.cueing.gain if gain is None else gain,
        ))
    if force_limit is not None or jerk_limit is not None:
        cfg = replace(cfg, safety=replace(
            cfg.safety,
            force_limit=cfg.safety.force_limit if force_limit is None else force_limit,
            jerk_limit=cfg.safety.jerk_limit if jerk_limit is None else jerk_limit,
        ))
    if source is not None or trace_path is not None:
        # applied together: trace_replay validates trace_path's presence
        cfg = replace(
            cfg,
            source=cfg.source if source is None else SOURCE_ALIASES.get(source, source),
            trace_path=cfg.trace_path if trace_path is None else str(trace_path),
        )
    if tick_rate is not None:
        cfg = replace(cfg, tick_rate=tick_rate)
    return cfg
