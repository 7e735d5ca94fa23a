import numpy as np
from hypothesis import HealthCheck, settings

# Property tests run fine but CI boxes are slow; never fail on wall time.
settings.register_profile(
    "kinhmd",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("kinhmd")


_trapz = getattr(np, "trapezoid", np.trapz)


def trapezoid_integral(ts, values):
    """Independent trapezoidal quadrature oracle."""
    return float(_trapz(np.asarray(values), np.asarray(ts)))


def cumulative_trapezoid(ts, values):
    ts = np.asarray(ts)
    values = np.asarray(values)
    mids = 0.5 * (values[1:] + values[:-1]) * np.diff(ts)
    return np.concatenate([[0.0], np.cumsum(mids)])
