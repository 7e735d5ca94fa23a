import json

import pytest

from kinhmd.cli import main
from kinhmd.config import (
    SessionConfig,
    apply_overrides,
    from_mapping,
    load_config,
)
from kinhmd.stimulus import ConfigError, load_trace

SAMPLE_YAML = """
session:
  tick_rate_hz: 500
  source: stimulus
telemetry:
  port: 49010
  record_index: 17
  slots: [3, 4, 5]
  scale: 9.80665
  staleness_timeout_s: 0.3
cueing:
  mode: indirect
  gain: 1.5
  torque_deadband_n: 0.8
  washout:
    enabled: true
    recenter_stiffness_n_per_m: 15.0
    recenter_force_cap_n: 0.4
safety:
  force_limit_n: 8.0
  jerk_limit_n_per_s: 150.0
  fade_s: 0.2
plant:
  head_mass_kg: 6.0
stimulus:
  step_amplitude_m_s2: 4.0
"""


def test_load_yaml_config(tmp_path):
    path = tmp_path / "cfg.yaml"
    path.write_text(SAMPLE_YAML)
    cfg = load_config(path)
    assert cfg.tick_rate == 500
    assert cfg.source == "synthetic_stimulus"
    assert cfg.telemetry.port == 49010
    assert cfg.telemetry.record_index == 17
    assert cfg.telemetry.slots == (3, 4, 5)
    assert cfg.telemetry.scale == pytest.approx(9.80665)
    assert cfg.cueing.mode == "indirect"
    assert cfg.cueing.gain == 1.5
    assert cfg.cueing.torque_deadband == 0.8
    assert cfg.cueing.washout_enabled
    assert cfg.cueing.washout.recenter_force_cap == 0.4
    assert cfg.safety.force_limit == 8.0
    assert cfg.safety.jerk_limit == 150.0
    assert cfg.safety.fade_duration == 0.2
    assert cfg.plant.head_mass == 6.0
    assert cfg.stimulus.step_amplitude == 4.0


def test_json_is_valid_yaml(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"cueing": {"mode": "direct", "gain": 1.0}}))
    cfg = load_config(path)
    assert cfg.cueing.mode == "direct"


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError):
        from_mapping({"cueing": {"giain": 2.0}})
    with pytest.raises(ConfigError):
        from_mapping({"telemetree": {}})


def test_washout_cap_must_stay_below_force_limit():
    with pytest.raises(ConfigError):
        from_mapping({
            "cueing": {"washout": {"recenter_force_cap_n": 9.0}},
            "safety": {"force_limit_n": 8.0},
        })


def test_apply_overrides():
    cfg = apply_overrides(
        SessionConfig(), source="udp", mode="direct", gain=0.5,
        force_limit=6.0, jerk_limit=100.0,
    )
    assert cfg.source == "live_udp"
    assert cfg.cueing.mode == "direct"
    assert cfg.cueing.gain == 0.5
    assert cfg.safety.force_limit == 6.0
    assert cfg.safety.jerk_limit == 100.0


def test_cli_stimulus_roundtrip(tmp_path, capsys):
    out = tmp_path / "stim.csv"
    assert main(["stimulus", "--out", str(out), "--rate", "250"]) == 0
    trace = load_trace(out)
    assert len(trace.samples) == 2501
    assert "2501 samples" in capsys.readouterr().out


def test_cli_run_with_log_and_record(tmp_path, capsys):
    log_out = tmp_path / "log.jsonl"
    rec_out = tmp_path / "inputs.csv"
    rc = main([
        "run", "--mode", "indirect", "--duration", "1.5",
        "--log-out", str(log_out), "--record", str(rec_out),
    ])
    assert rc == 0
    assert log_out.exists() and rec_out.exists()
    out = capsys.readouterr().out
    assert "ran 1500 ticks" in out
    assert load_trace(rec_out).samples[0].timestamp == 0.0


def test_cli_run_replays_recorded_trace(tmp_path, capsys):
    trace_path = tmp_path / "stim.csv"
    main(["stimulus", "--out", str(trace_path)])
    rc = main([
        "run", "--source", "trace", "--trace", str(trace_path),
        "--mode", "indirect", "--duration", "2",
    ])
    assert rc == 0


def test_cli_trial_scripted(tmp_path, capsys):
    records = tmp_path / "records.jsonl"
    report = tmp_path / "report.txt"
    quartiles = tmp_path / "quartiles.json"
    rc = main([
        "trial", "--scripted", "--reps", "1", "--seed", "3",
        "--out", str(records), "--report", str(report),
        "--report-json", str(quartiles),
    ])
    assert rc == 0
    lines = [json.loads(l) for l in records.read_text().splitlines()]
    assert len(lines) == 3
    assert {l["condition"] for l in lines} == {"H_NONE", "H_DIRECT", "H_INDIRECT"}
    assert report.exists()
    assert "median" in quartiles.read_text()


def test_cli_replay_reports_and_flags_violations(tmp_path, capsys):
    log_out = tmp_path / "log.jsonl"
    main(["run", "--mode", "indirect", "--duration", "1.0", "--log-out", str(log_out)])
    capsys.readouterr()
    assert main(["replay", "--log", str(log_out)]) == 0
    out = capsys.readouterr().out
    assert "peak |force|" in out
    assert "0 violations" in out
    # an absurdly low limit turns the same log into a violation report
    assert main(["replay", "--log", str(log_out), "--limit", "0.1"]) == 1
