import math

import pytest
from hypothesis import given, strategies as st

from kinhmd.stimulus import (
    ConfigError,
    PatternDomainError,
    StimulusPattern,
    Trace,
    TraceError,
    eval_pattern,
    load_trace,
    save_trace,
    synthesize_trace,
)

from conftest import cumulative_trapezoid, trapezoid_integral

DEF = StimulusPattern()


def test_default_pattern_shape():
    assert DEF.step_amplitude == 5.0
    assert DEF.plateau_duration == 4.0
    assert DEF.ease_duration == 0.5
    assert DEF.step_duration == 5.0
    assert DEF.total_duration == 10.0


def test_plateau_and_rest_values():
    assert eval_pattern(DEF, 2.0) == 5.0
    assert eval_pattern(DEF, 7.0) == -5.0
    assert eval_pattern(DEF, 0.0) == 0.0
    assert eval_pattern(DEF, 5.0) == 0.0
    assert eval_pattern(DEF, 10.0) == 0.0


def test_ramp_midpoint():
    # Raised cosine at the ramp midpoint: A * (1 - cos(pi/2)) / 2 = A/2.
    assert eval_pattern(DEF, 0.25) == pytest.approx(2.5, abs=1e-12)


@pytest.mark.parametrize("t", [-0.001, 10.001, -5.0, 100.0])
def test_domain_error(t):
    with pytest.raises(PatternDomainError):
        eval_pattern(DEF, t)


def test_pattern_validation():
    with pytest.raises(ConfigError):
        StimulusPattern(step_amplitude=0.0)
    with pytest.raises(ConfigError):
        StimulusPattern(ease_duration=0.0)
    with pytest.raises(ConfigError):
        StimulusPattern(plateau_duration=-1.0)


@given(st.floats(min_value=0.0, max_value=5.0, allow_nan=False))
def test_antisymmetry(t):
    half = DEF.step_duration
    assert eval_pattern(DEF, t) == pytest.approx(-eval_pattern(DEF, t + half), abs=1e-12)


@given(
    st.floats(min_value=0.1, max_value=20.0),
    st.floats(min_value=0.0, max_value=10.0),
    st.floats(min_value=0.05, max_value=2.0),
    st.floats(min_value=0.0, max_value=1.0),
)
def test_bound(amplitude, plateau, ease, frac):
    p = StimulusPattern(amplitude, plateau, ease)
    t = frac * p.total_duration
    assert abs(eval_pattern(p, t)) <= amplitude + 1e-12


@given(
    st.floats(min_value=0.0, max_value=10.0),
    st.floats(min_value=1e-6, max_value=1e-3),
)
def test_lipschitz_continuity(t, delta):
    # Max slope of the easing is pi*A/(2*tau); the plateau is flat.
    if t + delta > DEF.total_duration:
        t = DEF.total_duration - delta
    bound = math.pi * DEF.step_amplitude / (2.0 * DEF.ease_duration)
    d = abs(eval_pattern(DEF, t + delta) - eval_pattern(DEF, t))
    assert d <= bound * delta + 1e-9


def test_sample_count_at_1khz():
    trace = synthesize_trace(DEF, 1000.0)
    assert len(trace.samples) == 10001
    assert trace.source == "synthetic"


def test_synthetic_spacing_within_one_percent():
    trace = synthesize_trace(DEF, 997.0)
    dts = [
        b.timestamp - a.timestamp
        for a, b in zip(trace.samples, trace.samples[1:])
    ]
    nominal = 1.0 / 997.0
    assert all(abs(dt - nominal) <= 0.01 * nominal for dt in dts)


def test_net_velocity_zero():
    trace = synthesize_trace(DEF, 1000.0)
    ts = [s.timestamp for s in trace.samples]
    ax = [s.accel[0] for s in trace.samples]
    dv = trapezoid_integral(ts, ax)
    assert abs(dv) < 1e-6 * DEF.step_amplitude * DEF.total_duration


@given(
    st.floats(min_value=0.5, max_value=15.0),
    st.floats(min_value=0.0, max_value=6.0),
    st.floats(min_value=0.1, max_value=1.5),
    st.floats(min_value=150.0, max_value=2000.0),
)
def test_net_velocity_zero_any_pattern(amplitude, plateau, ease, rate):
    p = StimulusPattern(amplitude, plateau, ease)
    trace = synthesize_trace(p, rate)
    ts = [s.timestamp for s in trace.samples]
    ax = [s.accel[0] for s in trace.samples]
    dv = trapezoid_integral(ts, ax)
    # trapezoid error bound: total * h^2 * max|a''| / 12 with
    # max|a''| = A/2 * (pi/ease)^2; antisymmetry cancels everything else
    h = 1.0 / rate
    bound = p.total_duration * h * h * amplitude * math.pi ** 2 / (24.0 * ease * ease)
    assert abs(dv) <= bound + 1e-9


def test_peak_velocity():
    # Analytic: one full step integrates to A * (plateau + ease).
    expected = DEF.step_amplitude * (DEF.plateau_duration + DEF.ease_duration)
    assert expected == 22.5
    trace = synthesize_trace(DEF, 1000.0)
    ts = [s.timestamp for s in trace.samples]
    ax = [s.accel[0] for s in trace.samples]
    v = cumulative_trapezoid(ts, ax)
    assert max(v) == pytest.approx(22.5, abs=0.01)
    # peak sits at the step boundary
    assert ts[int(v.argmax())] == pytest.approx(5.0, abs=1e-3)


def test_lateral_and_vertical_channels_zero():
    trace = synthesize_trace(DEF, 500.0)
    assert all(s.accel[1] == 0.0 and s.accel[2] == 0.0 for s in trace.samples)


def test_rate_below_minimum():
    with pytest.raises(ConfigError):
        synthesize_trace(DEF, 99.0)


def test_roundtrip_save_load(tmp_path):
    path = tmp_path / "trace.csv"
    trace = synthesize_trace(DEF, 250.0)
    save_trace(trace, path)
    loaded = load_trace(path)
    assert loaded.source == "recorded"
    assert len(loaded.samples) == len(trace.samples)
    for a, b in zip(trace.samples, loaded.samples):
        assert abs(a.timestamp - b.timestamp) <= 1e-9
        for i in range(3):
            assert abs(a.accel[i] - b.accel[i]) <= 1e-9
    assert loaded.sample_rate == pytest.approx(250.0, rel=1e-9)


def test_load_normalizes_time_offset(tmp_path):
    path = tmp_path / "offset.csv"
    path.write_text("t,ax,ay,az\n100.5,1.0,0.0,0.0\n100.6,2.0,0.0,0.0\n")
    trace = load_trace(path)
    assert trace.samples[0].timestamp == 0.0
    assert trace.samples[1].timestamp == pytest.approx(0.1)


def test_load_decreasing_timestamps(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("t,ax,ay,az\n0.0,1,0,0\n0.2,1,0,0\n0.1,1,0,0\n")
    with pytest.raises(TraceError) as exc:
        load_trace(path)
    assert exc.value.line == 4


def test_load_nonfinite_names_line(tmp_path):
    path = tmp_path / "nan.csv"
    path.write_text("t,ax,ay,az\n0.0,1,0,0\n0.1,nan,0,0\n")
    with pytest.raises(TraceError) as exc:
        load_trace(path)
    assert exc.value.line == 3
    assert "line 3" in str(exc.value)


def test_load_malformed_row(tmp_path):
    path = tmp_path / "short.csv"
    path.write_text("t,ax,ay,az\n0.0,1,0\n")
    with pytest.raises(TraceError) as exc:
        load_trace(path)
    assert exc.value.line == 2


def test_load_empty_file(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("t,ax,ay,az\n")
    with pytest.raises(TraceError):
        load_trace(path)


def test_trace_must_not_be_empty():
    with pytest.raises(TraceError):
        Trace((), 100.0, "synthetic")
