"""Plain-float 3-vector and quaternion helpers.

The control loop runs at 1 kHz in pure Python; tuples of floats beat numpy
by an order of magnitude for 3-element work, so everything hot-path lives
here as free functions. Quaternions are (x, y, z, w), scalar last.
"""

from __future__ import annotations

import math

Vec3 = tuple[float, float, float]
Quat = tuple[float, float, float, float]

ZERO3: Vec3 = (0.0, 0.0, 0.0)
QUAT_IDENTITY: Quat = (0.0, 0.0, 0.0, 1.0)

# Below this vector-part norm the quaternion log map switches to its
# small-angle series to avoid division blow-up.
_SMALL_ANGLE = 1e-12


def add(a: Vec3, b: Vec3) -> Vec3:
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2])


def sub(a: Vec3, b: Vec3) -> Vec3:
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


def scale(a: Vec3, s: float) -> Vec3:
    return (a[0] * s, a[1] * s, a[2] * s)


def neg(a: Vec3) -> Vec3:
    return (-a[0], -a[1], -a[2])


def dot(a: Vec3, b: Vec3) -> float:
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def cross(a: Vec3, b: Vec3) -> Vec3:
    return (
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    )


def norm(a: Vec3) -> float:
    return math.sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2])


def is_finite(a: Vec3) -> bool:
    return math.isfinite(a[0]) and math.isfinite(a[1]) and math.isfinite(a[2])


def clamp_norm(a: Vec3, limit: float) -> Vec3:
    """Radially rescale ``a`` onto the ball of radius ``limit``; direction preserved."""
    n = norm(a)
    if n <= limit:
        return a
    return scale(a, limit / n)


def normalized(a: Vec3) -> Vec3:
    n = norm(a)
    return (a[0] / n, a[1] / n, a[2] / n)


def quat_norm(q: Quat) -> float:
    return math.sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3])


def quat_normalize(q: Quat) -> Quat:
    n = quat_norm(q)
    return (q[0] / n, q[1] / n, q[2] / n, q[3] / n)


def quat_multiply(a: Quat, b: Quat) -> Quat:
    ax, ay, az, aw = a
    bx, by, bz, bw = b
    return (
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
        aw * bw - ax * bx - ay * by - az * bz,
    )


def quat_from_rotvec(v: Vec3) -> Quat:
    """Exponential map: rotation vector (axis * angle, rad) to unit quaternion."""
    angle = norm(v)
    if angle < _SMALL_ANGLE:
        return (0.5 * v[0], 0.5 * v[1], 0.5 * v[2], 1.0)
    half = 0.5 * angle
    k = math.sin(half) / angle
    return (v[0] * k, v[1] * k, v[2] * k, math.cos(half))


def quat_to_rotvec(q: Quat) -> Vec3:
    """Log map: unit quaternion to rotation vector, shortest arc."""
    x, y, z, w = q
    if w < 0.0:
        x, y, z, w = -x, -y, -z, -w
    s = math.sqrt(x * x + y * y + z * z)
    if s < _SMALL_ANGLE:
        return (2.0 * x, 2.0 * y, 2.0 * z)
    k = 2.0 * math.atan2(s, w) / s
    return (x * k, y * k, z * k)


def quat_integrate(q: Quat, omega: Vec3, dt: float) -> Quat:
    """Advance orientation by world-frame angular velocity over dt; renormalized."""
    dq = quat_from_rotvec((omega[0] * dt, omega[1] * dt, omega[2] * dt))
    return quat_normalize(quat_multiply(dq, q))


def quat_rotate(q: Quat, v: Vec3) -> Vec3:
    """Rotate vector v by quaternion q."""
    x, y, z, w = q
    # t = 2 * (q_vec x v); v' = v + w*t + q_vec x t
    tx = 2.0 * (y * v[2] - z * v[1])
    ty = 2.0 * (z * v[0] - x * v[2])
    tz = 2.0 * (x * v[1] - y * v[0])
    return (
        v[0] + w * tx + (y * tz - z * ty),
        v[1] + w * ty + (z * tx - x * tz),
        v[2] + w * tz + (x * ty - y * tx),
    )
