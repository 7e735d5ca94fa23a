"""Displacement stimulus synthesis and acceleration trace I/O.

The built-in stimulus is a double acceleration step on the forward axis:
a raised-cosine eased step up to +A, held, eased back to zero, then the
exact mirror at -A. The mirror construction makes the net velocity change
of a full pattern provably zero.

Trace files are UTF-8 CSV with header ``t,ax,ay,az`` (seconds, m/s^2) and
LF line endings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .vecmath import Vec3

TRACE_HEADER = "t,ax,ay,az"
MIN_SYNTH_RATE_HZ = 100.0

SOURCE_SYNTHETIC = "synthetic"
SOURCE_RECORDED = "recorded"
SOURCE_LIVE = "live"


class PatternDomainError(ValueError):
    """Pattern evaluated outside [0, total_duration]."""


class TraceError(ValueError):
    """Trace file missing, empty, malformed, or violating trace invariants."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class StimulusPattern:
    """Double-step acceleration profile on the forward axis.

    One step is ease-up (raised cosine, ease_duration), plateau at
    step_amplitude, ease-down; the second step is the exact mirror at
    -step_amplitude. Defaults: 5 m/s^2 held for 4 s with 0.5 s ramps,
    10 s overall.
    """

    step_amplitude: float = 5.0    # m/s^2
    plateau_duration: float = 4.0  # s
    ease_duration: float = 0.5     # s

    def __post_init__(self):
        if not (self.step_amplitude > 0.0):
            raise ConfigError(f"step_amplitude must be > 0, got {self.step_amplitude}")
        if not (self.ease_duration > 0.0):
            raise ConfigError(f"ease_duration must be > 0, got {self.ease_duration}")
        if self.plateau_duration < 0.0:
            raise ConfigError(f"plateau_duration must be >= 0, got {self.plateau_duration}")

    @property
    def step_duration(self) -> float:
        return 2.0 * self.ease_duration + self.plateau_duration

    @property
    def total_duration(self) -> float:
        return 2.0 * self.step_duration


@dataclass(frozen=True)
class AccelerationSample:
    """Timestamped 3-axis linear acceleration (m/s^2), vehicle frame x/y/z."""

    timestamp: float
    accel: Vec3


@dataclass(frozen=True)
class Trace:
    """Ordered acceleration samples plus their nominal rate and origin."""

    samples: tuple[AccelerationSample, ...]
    sample_rate: float
    source: str

    def __post_init__(self):
        if not self.samples:
            raise TraceError("trace has no samples")
        if self.source not in (SOURCE_SYNTHETIC, SOURCE_RECORDED, SOURCE_LIVE):
            raise ConfigError(f"unknown trace source {self.source!r}")

    @property
    def duration(self) -> float:
        return self.samples[-1].timestamp - self.samples[0].timestamp


def _single_step(p: StimulusPattern, t: float) -> float:
    """One eased step, zero at both ends, +amplitude on the plateau."""
    tau = p.ease_duration
    if t < tau:
        return p.step_amplitude * 0.5 * (1.0 - math.cos(math.pi * t / tau))
    remaining = p.step_duration - t
    if remaining < tau:
        return p.step_amplitude * 0.5 * (1.0 - math.cos(math.pi * remaining / tau))
    return p.step_amplitude


def eval_pattern(p: StimulusPattern, t: float) -> float:
    """Forward acceleration (m/s^2) of the pattern at time t.

    Antisymmetric about the midpoint: the deceleration half is the exact
    mirror of the acceleration half. Raises PatternDomainError outside
    [0, total_duration].
    """
    if not (0.0 <= t <= p.total_duration):
        raise PatternDomainError(
            f"t={t} outside pattern domain [0, {p.total_duration}]"
        )
    half = p.step_duration
    if t <= half:
        return _single_step(p, t)
    return -_single_step(p, t - half)


def synthesize_trace(p: StimulusPattern, rate: float) -> Trace:
    """Sample the pattern at a fixed rate, forward axis only.

    Yields ceil(total_duration * rate) + 1 samples covering [0, total].
    """
    if rate < MIN_SYNTH_RATE_HZ:
        raise ConfigError(f"sample rate {rate} Hz below minimum {MIN_SYNTH_RATE_HZ} Hz")
    n = math.ceil(p.total_duration * rate)
    total = p.total_duration
    samples = []
    for i in range(n + 1):
        t = i / rate
        # The last grid point can land one ulp past the domain end.
        a = eval_pattern(p, t if t <= total else total)
        samples.append(AccelerationSample(t, (a, 0.0, 0.0)))
    return Trace(tuple(samples), rate, SOURCE_SYNTHETIC)


def save_trace(trace: Trace, path) -> None:
    """Write a trace in the CSV trace format (shortest round-trip floats)."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(TRACE_HEADER + "\n")
        for s in trace.samples:
            f.write(f"{s.timestamp!r},{s.accel[0]!r},{s.accel[1]!r},{s.accel[2]!r}\n")


def load_trace(path) -> Trace:
    """Load a recorded trace; timestamps are normalized to start at zero.

    Raises TraceError with the offending line number for malformed rows,
    non-finite values, or decreasing timestamps; an empty file (no data
    rows) is also an error.
    """
    samples: list[AccelerationSample] = []
    t_first = 0.0
    t_prev = None
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line:
                continue
            if lineno == 1 and line.lower() == TRACE_HEADER:
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise TraceError(f"expected 4 comma-separated fields, got {len(parts)}", lineno)
            try:
                t, ax, ay, az = (float(v) for v in parts)
            except ValueError:
                raise TraceError(f"unparseable value in {line!r}", lineno) from None
            if not all(math.isfinite(v) for v in (t, ax, ay, az)):
                raise TraceError("non-finite value", lineno)
            if t_prev is None:
                t_first = t
            elif t < t_prev:
                raise TraceError(f"timestamp {t} decreases (previous {t_prev})", lineno)
            t_prev = t
            samples.append(AccelerationSample(t - t_first, (ax, ay, az)))
    if not samples:
        raise TraceError(f"{path}: no samples")
    if len(samples) > 1 and samples[-1].timestamp > 0.0:
        rate = (len(samples) - 1) / samples[-1].timestamp
    else:
        rate = 0.0
    return Trace(tuple(samples), rate, SOURCE_RECORDED)
