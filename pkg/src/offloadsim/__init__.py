"""Deterministic edge/cloud task-offloading simulator with in-band timestamp
telemetry, a threshold-driven offloading controller, and a closed-form
metro/core traffic model."""

from .offload import (
    AppAction,
    OffloadDecision,
    RtEstimator,
    TaskDescriptor,
    TerminalPolicyState,
    apply_notification,
    classify,
    decide,
    make_notification,
    reclassify_nonrt,
    route_for,
)
from .scenario import ScenarioConfig, ScenarioError, load_scenario
from .simnet import (
    EventTrace,
    ServerModel,
    ServiceSchedule,
    ServiceWindow,
    SimulationResult,
    Topology,
    TraceEvent,
    TraceEventType,
    build_topology,
    run_scenario,
)
from .tasks import (
    Destination,
    NodeId,
    NodeKind,
    PacketKind,
    Task,
    TaskClass,
    TaskIdGenerator,
)
from .telemetry import (
    DelayHistogram,
    MonitoringRecord,
    ReportStore,
    build_histogram,
    hop_delays,
    parse_feed,
    publish_feed,
)
from .traffic import Strategy, TrafficParams, cloud_bound_soft_rate, metro_core_traffic, sweep
from .wire import (
    CodecError,
    IntEntry,
    TelemetryReport,
    WirePacket,
    decode,
    encode,
    push_timestamp,
    strip_and_copy,
)

__version__ = "0.1.0"
