"""Head-based force-feedback motion cueing engine.

Turns self-motion acceleration streams into safe force/torque commands for
a head-mounted haptic end-effector, with a simulated device and head/neck
plant, a stimulus generator, a safety supervisor, and a trial-sequencing
session service.
"""

from .config import SessionConfig, TelemetryConfig, from_mapping, load_config
from .cueing import (
    CueingConfig,
    Washout,
    WashoutConfig,
    WrenchCommand,
    cueing_tick,
    render_force,
    torque_policy,
)
from .device import (
    DeviceLog,
    HeadState,
    PlantConfig,
    SimulatedDevice,
    lean_amplitude,
    plant_step,
)
from .safety import (
    CalibrationResult,
    KillState,
    KillSwitch,
    SafetyChain,
    SafetyConfig,
    calibrate_gain,
    clamp_force,
    gate_output,
    kill_transition,
    limit_jerk,
)
from .session import (
    CONDITIONS,
    RATING_SCALES,
    ScriptedResponder,
    SessionRuntime,
    TrialPlan,
    TrialRecord,
    plan_trials,
    run_loop,
    run_session,
    run_trial,
    summarize,
)
from .stimulus import (
    AccelerationSample,
    StimulusPattern,
    Trace,
    eval_pattern,
    load_trace,
    save_trace,
    synthesize_trace,
)
from .telemetry import (
    ChannelMap,
    DataPacket,
    DataRecord,
    FeedStatus,
    UdpReceiver,
    check_staleness,
    encode_packet,
    extract_sample,
    parse_packet,
)

__version__ = "0.1.0"
