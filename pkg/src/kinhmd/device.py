"""Device abstraction and simulated head/neck plant.

The plant stands in for a grounded haptic arm coupled to a wearer's head:
a point mass on a linear neck spring-damper inside a hard-stop workspace,
plus rigid-body rotation. Applied force acts through a connector offset
behind and below the head center, so real force commands produce the
parasitic lever-arm torques the cylinder-joint policy exists to cancel:
in cylinder mode a PD controller holds orientation on the two axes
orthogonal to the joint axis (zero device torque about it), in free mode
the device applies no torque and only the passive neck resists.

Workspace note: the nominal arm workspace is quoted as 1.3 m x 5 m x 1 m
in vendor-style specs, but 5 m of lateral travel for a desk-grounded arm
is implausible and is read here as 0.5 m. Default half-extents are
(0.65, 0.25, 0.5) m; override in PlantConfig if your device differs.
"""

from __future__ import annotations

import gzip
import json
import math
from array import array
from dataclasses import dataclass

from .cueing import WrenchCommand
from .safety import HardFault
from .stimulus import ConfigError
from .vecmath import (
    QUAT_IDENTITY,
    ZERO3,
    Quat,
    Vec3,
    cross,
    dot,
    is_finite,
    norm,
    quat_integrate,
    quat_rotate,
    quat_to_rotvec,
)

DEFAULT_HEAD_MASS_KG = 5.5          # ~4.7 kg head + 0.8 kg headset hardware
DEFAULT_NECK_STIFFNESS = 300.0      # N/m
DEFAULT_ROT_STIFFNESS = 1.5         # N*m/rad, passive neck
DEFAULT_ROT_DAMPING = 0.3           # N*m*s/rad
DEFAULT_WORKSPACE_HALFEXTENTS: Vec3 = (0.65, 0.25, 0.5)
DEFAULT_INTEGRATOR_DT = 0.001

# Head treated as a solid sphere for inertia; connector sits at the back
# of the headband, slightly below the mass center.
HEAD_RADIUS_M = 0.09
CONNECTOR_OFFSET_M: Vec3 = (-0.09, 0.0, -0.03)

# Orientation-hold PD stiffness in cylinder-joint mode. Sized so the worst
# parasitic torque at the force ceiling leaves well under 1 degree of error.
ORIENT_HOLD_STIFFNESS = 150.0       # N*m/rad


def critical_damping(stiffness: float, mass: float) -> float:
    return 2.0 * math.sqrt(stiffness * mass)


@dataclass(frozen=True)
class HeadState:
    """Simulated head pose within the device workspace (workspace-center frame)."""

    position: Vec3 = ZERO3
    velocity: Vec3 = ZERO3
    orientation: Quat = QUAT_IDENTITY
    angular_velocity: Vec3 = ZERO3


@dataclass(frozen=True)
class PlantConfig:
    head_mass: float = DEFAULT_HEAD_MASS_KG
    neck_stiffness: float = DEFAULT_NECK_STIFFNESS
    neck_damping: float = critical_damping(DEFAULT_NECK_STIFFNESS, DEFAULT_HEAD_MASS_KG)
    rot_stiffness: float = DEFAULT_ROT_STIFFNESS
    rot_damping: float = DEFAULT_ROT_DAMPING
    workspace_halfextents: Vec3 = DEFAULT_WORKSPACE_HALFEXTENTS
    integrator_dt: float = DEFAULT_INTEGRATOR_DT

    def __post_init__(self):
        positives = (
            self.head_mass, self.neck_stiffness, self.neck_damping,
            self.rot_stiffness, self.rot_damping, self.integrator_dt,
        )
        if not all(v > 0.0 and math.isfinite(v) for v in positives):
            raise ConfigError(f"plant parameters must be positive and finite: {self}")
        if not all(h > 0.0 for h in self.workspace_halfextents):
            raise ConfigError(f"workspace_halfextents must be positive: {self.workspace_halfextents}")
        if self.integrator_dt > 0.001:
            raise ConfigError(f"integrator_dt must be <= 1 ms, got {self.integrator_dt}")

    @property
    def damping_ratio(self) -> float:
        return self.neck_damping / critical_damping(self.neck_stiffness, self.head_mass)

    @property
    def head_inertia(self) -> float:
        """Solid-sphere approximation, kg*m^2."""
        return 0.4 * self.head_mass * HEAD_RADIUS_M * HEAD_RADIUS_M


def plant_step(cfg: PlantConfig, s: HeadState, cmd: WrenchCommand, dt: float) -> HeadState:
    """One semi-implicit (symplectic) Euler step of the head/neck dynamics.

    Translation: m*x'' = F - k*x - c*x', position clipped to the workspace
    with the contact-normal velocity zeroed. Rotation: passive neck
    spring-damper plus the connector lever-arm torque of the applied force;
    the device adds the orientation-hold PD only in cylinder-joint mode,
    projected so there is zero device torque about the joint axis.
    """
    f = cmd.force
    if not is_finite(f):
        raise HardFault(f"non-finite commanded force {f}")
    m = cfg.head_mass
    k = cfg.neck_stiffness
    c = cfg.neck_damping
    px, py, pz = s.position
    vx, vy, vz = s.velocity

    vx += dt * (f[0] - k * px - c * vx) / m
    vy += dt * (f[1] - k * py - c * vy) / m
    vz += dt * (f[2] - k * pz - c * vz) / m
    px += dt * vx
    py += dt * vy
    pz += dt * vz

    hx, hy, hz = cfg.workspace_halfextents
    if px > hx:
        px, vx = hx, 0.0
    elif px < -hx:
        px, vx = -hx, 0.0
    if py > hy:
        py, vy = hy, 0.0
    elif py < -hy:
        py, vy = -hy, 0.0
    if pz > hz:
        pz, vz = hz, 0.0
    elif pz < -hz:
        pz, vz = -hz, 0.0

    theta = quat_to_rotvec(s.orientation)
    omega = s.angular_velocity
    tau = (
        -cfg.rot_stiffness * theta[0] - cfg.rot_damping * omega[0],
        -cfg.rot_stiffness * theta[1] - cfg.rot_damping * omega[1],
        -cfg.rot_stiffness * theta[2] - cfg.rot_damping * omega[2],
    )
    if f != ZERO3:
        lever = quat_rotate(s.orientation, CONNECTOR_OFFSET_M)
        parasitic = cross(lever, f)
        tau = (tau[0] + parasitic[0], tau[1] + parasitic[1], tau[2] + parasitic[2])
    axis = cmd.torque_axis
    if axis is not None:
        inertia = cfg.head_inertia
        kd = 2.0 * math.sqrt(ORIENT_HOLD_STIFFNESS * inertia)
        hold = (
            -ORIENT_HOLD_STIFFNESS * theta[0] - kd * omega[0],
            -ORIENT_HOLD_STIFFNESS * theta[1] - kd * omega[1],
            -ORIENT_HOLD_STIFFNESS * theta[2] - kd * omega[2],
        )
        along = dot(hold, axis)  # cylinder joint: no device torque about the axis
        tau = (
            tau[0] + hold[0] - along * axis[0],
            tau[1] + hold[1] - along * axis[1],
            tau[2] + hold[2] - along * axis[2],
        )
    inv_inertia = 1.0 / cfg.head_inertia
    omega = (
        omega[0] + dt * tau[0] * inv_inertia,
        omega[1] + dt * tau[1] * inv_inertia,
        omega[2] + dt * tau[2] * inv_inertia,
    )
    orientation = quat_integrate(s.orientation, omega, dt)

    state = HeadState((px, py, pz), (vx, vy, vz), orientation, omega)
    if not (is_finite(state.position) and is_finite(state.velocity) and is_finite(omega)):
        raise HardFault(f"plant state diverged: {state}")
    return state


def mechanical_energy(cfg: PlantConfig, s: HeadState) -> float:
    """Kinetic plus elastic energy stored in the head/neck plant (J)."""
    v2 = dot(s.velocity, s.velocity)
    x2 = dot(s.position, s.position)
    w2 = dot(s.angular_velocity, s.angular_velocity)
    theta = quat_to_rotvec(s.orientation)
    t2 = dot(theta, theta)
    return 0.5 * (cfg.head_mass * v2 + cfg.neck_stiffness * x2
                  + cfg.head_inertia * w2 + cfg.rot_stiffness * t2)


_TQ_FREE = 0
_TQ_CYLINDER = 1
_TQ_NAMES = {0: "free", 1: "cylinder_joint"}
# Per-tick flat layout: t, commanded fx..fz, applied fx..fz, tq mode,
# px..pz, vx..vz, qx..qz,qw, wx..wz.
_REC_FIELDS = 21


class DeviceLog:
    """Per-tick log of commanded/applied wrenches and plant state.

    Backed by a flat float array so multi-minute 1 kHz sessions stay cheap;
    one record per control tick, strictly increasing timestamps.
    """

    def __init__(self):
        self._data = array("d")
        self._last_t = None

    def __len__(self) -> int:
        return len(self._data) // _REC_FIELDS

    def append(self, t: float, commanded: WrenchCommand, applied: Vec3, state: HeadState) -> None:
        if self._last_t is not None and t <= self._last_t:
            raise ValueError(f"non-increasing log timestamp {t} after {self._last_t}")
        self._last_t = t
        cf = commanded.force
        p, v, q, w = state.position, state.velocity, state.orientation, state.angular_velocity
        self._data.extend((
            t, cf[0], cf[1], cf[2], applied[0], applied[1], applied[2],
            float(_TQ_FREE if commanded.torque_axis is None else _TQ_CYLINDER),
            p[0], p[1], p[2], v[0], v[1], v[2], q[0], q[1], q[2], q[3],
            w[0], w[1], w[2],
        ))

    def record(self, i: int) -> dict:
        base = i * _REC_FIELDS
        if base < 0 or base >= len(self._data):
            raise IndexError(i)
        d = self._data
        return {
            "t": d[base],
            "commanded": (d[base + 1], d[base + 2], d[base + 3]),
            "applied": (d[base + 4], d[base + 5], d[base + 6]),
            "torque_mode": _TQ_NAMES[int(d[base + 7])],
            "position": (d[base + 8], d[base + 9], d[base + 10]),
            "velocity": (d[base + 11], d[base + 12], d[base + 13]),
            "orientation": (d[base + 14], d[base + 15], d[base + 16], d[base + 17]),
            "angular_velocity": (d[base + 18], d[base + 19], d[base + 20]),
        }

    def __iter__(self):
        for i in range(len(self)):
            yield self.record(i)

    def column(self, offset: int) -> list[float]:
        return self._data[offset::_REC_FIELDS].tolist()

    def times(self) -> list[float]:
        return self.column(0)

    def applied_forces(self) -> list[Vec3]:
        d = self._data
        return [(d[b + 4], d[b + 5], d[b + 6]) for b in range(0, len(d), _REC_FIELDS)]

    def positions(self) -> list[Vec3]:
        d = self._data
        return [(d[b + 8], d[b + 9], d[b + 10]) for b in range(0, len(d), _REC_FIELDS)]

    def raw(self) -> array:
        return self._data

    def export_jsonl(self, path, compress: bool = False) -> None:
        """Line-delimited export: one object per tick with the wrench and pose."""
        opener = gzip.open if compress or str(path).endswith(".gz") else open
        with opener(path, "wt", encoding="utf-8") as f:
            for i in range(len(self)):
                base = i * _REC_FIELDS
                d = self._data
                f.write(json.dumps({
                    "t": d[base],
                    "fx": d[base + 4], "fy": d[base + 5], "fz": d[base + 6],
                    "tq_mode": _TQ_NAMES[int(d[base + 7])],
                    "px": d[base + 8], "py": d[base + 9], "pz": d[base + 10],
                    "qx": d[base + 14], "qy": d[base + 15], "qz": d[base + 16],
                    "qw": d[base + 17],
                }) + "\n")

    @staticmethod
    def load_jsonl(path) -> list[dict]:
        opener = gzip.open if str(path).endswith(".gz") else open
        out = []
        with opener(path, "rt", encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    out.append(json.loads(line))
                except json.JSONDecodeError as exc:
                    raise ValueError(f"{path}:{lineno}: bad record: {exc}") from None
        return out


def lean_amplitude(log: DeviceLog, t_start: float | None = None, t_end: float | None = None) -> float:
    """Peak head displacement norm (m) over [t_start, t_end] of the log."""
    if len(log) == 0:
        raise ValueError("empty device log")
    peak = None
    d = log.raw()
    for base in range(0, len(d), _REC_FIELDS):
        t = d[base]
        if t_start is not None and t < t_start:
            continue
        if t_end is not None and t > t_end:
            break
        r = norm((d[base + 8], d[base + 9], d[base + 10]))
        if peak is None or r > peak:
            peak = r
    if peak is None:
        raise ValueError(f"no log records in window [{t_start}, {t_end}]")
    return peak


class SimulatedDevice:
    """Wrench-command sink driving the simulated plant; seam for real hardware.

    Commands are applied at the next plant tick. A control tick longer than
    the plant's integrator step is split into equal substeps so the
    integrator never runs coarser than 1 ms. After a hard fault the device
    rejects all further commands until reset.
    """

    def __init__(self, cfg: PlantConfig, tick_dt: float, state: HeadState | None = None,
                 log: DeviceLog | None = None, keep_log: bool = True):
        if tick_dt <= 0.0:
            raise ConfigError(f"tick_dt must be > 0, got {tick_dt}")
        self.cfg = cfg
        self.tick_dt = tick_dt
        self.substeps = max(1, math.ceil(round(tick_dt / cfg.integrator_dt, 9)))
        self.sub_dt = tick_dt / self.substeps
        self.state = state if state is not None else HeadState()
        self.log = log if log is not None else (DeviceLog() if keep_log else None)
        self.faulted = False
        self._pending: WrenchCommand | None = None

    def send(self, cmd: WrenchCommand) -> bool:
        """Queue a command for the next tick; False (rejected) once faulted."""
        if self.faulted:
            return False
        self._pending = cmd
        return True

    def tick(self, t: float) -> HeadState:
        """Advance the plant one control tick and log the result.

        Once faulted the plant freezes and every tick logs a zero wrench;
        commands were already being rejected by send().
        """
        if self.faulted:
            if self.log is not None:
                self.log.append(t, WrenchCommand(ZERO3, None, t), ZERO3, self.state)
            return self.state
        cmd = self._pending if self._pending is not None else WrenchCommand(ZERO3, None, t)
        try:
            for _ in range(self.substeps):
                self.state = plant_step(self.cfg, self.state, cmd, self.sub_dt)
        except HardFault:
            self.faulted = True
            raise
        if self.log is not None:
            self.log.append(t, cmd, cmd.force, self.state)
        return self.state

    def reset(self, state: HeadState | None = None) -> None:
        self.state = state if state is not None else HeadState()
        self.faulted = False
        self._pending = None
