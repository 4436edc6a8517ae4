import pytest

from helpers import parse_detail
from offloadsim.scenario import scenario_from_dict
from offloadsim.simnet import (
    Link,
    ServiceSchedule,
    ServiceWindow,
    TraceEventType,
    build_topology,
    edge_cpu_utilization,
    run_scenario,
    transmit_time,
)
from offloadsim.tasks import (
    Destination,
    NodeId,
    NodeKind,
    PacketKind,
    TaskClass,
    ns_from_ms,
    ns_from_s,
)
from offloadsim.telemetry import stack_timestamp

SW1 = NodeId(NodeKind.SWITCH, 1)
SW2 = NodeId(NodeKind.SWITCH, 2)
SW3 = NodeId(NodeKind.SWITCH, 3)
EDGE = NodeId(NodeKind.EDGE_SERVER, 0)
CLOUD = NodeId(NodeKind.CLOUD_SERVER, 0)
TS1 = NodeId(NodeKind.TELEMETRY_SERVER, 1)
TS2 = NodeId(NodeKind.TELEMETRY_SERVER, 2)


def small_scenario(**overrides):
    data = {
        "horizon_s": 4.0,
        "arrival_mode": "poisson",
        "firm_rate_per_s": 10.0,
        "soft_rate_per_s": 10.0,
        "offload_phases": [[0.0, 4.0, True]],
    }
    data.update(overrides)
    return scenario_from_dict(data, name="small")


# -- service schedule ---------------------------------------------------------

FIG5_WINDOWS = (
    ServiceWindow(ns_from_s(59), ns_from_s(127), ns_from_ms(40)),
    ServiceWindow(ns_from_s(249), ns_from_s(306), ns_from_ms(40)),
    ServiceWindow(ns_from_s(452), ns_from_s(517), ns_from_ms(40)),
    ServiceWindow(ns_from_s(587), ns_from_s(656), ns_from_ms(40)),
)


def oracle_service_time(windows, default_ns, t_ns):
    # independent window lookup: scan every window, no early exit tricks
    hits = [w.service_ns for w in windows if w.start_ns <= t_ns < w.end_ns]
    return hits[0] if hits else default_ns


def test_edge_service_time_inside_window():
    schedule = ServiceSchedule(FIG5_WINDOWS, ns_from_ms(1))
    assert schedule.service_time(ns_from_s(60)) == ns_from_ms(40)


def test_edge_service_time_low_load_default():
    schedule = ServiceSchedule(FIG5_WINDOWS, ns_from_ms(1))
    assert schedule.service_time(ns_from_s(10)) == ns_from_ms(1)


def test_cloud_service_time_constant():
    schedule = ServiceSchedule((), ns_from_ms(20))
    for t_s in (0, 60, 300, 679):
        assert schedule.service_time(ns_from_s(t_s)) == ns_from_ms(20)


@pytest.mark.parametrize("t_s", [0, 58.9, 59.0, 100, 126.99, 127.0, 300, 656.0, 679])
def test_service_time_matches_oracle(t_s):
    schedule = ServiceSchedule(FIG5_WINDOWS, ns_from_ms(1))
    t_ns = ns_from_s(t_s)
    assert schedule.service_time(t_ns) == oracle_service_time(FIG5_WINDOWS, ns_from_ms(1), t_ns)


# -- link transmission --------------------------------------------------------

def test_transmit_delay_only():
    assert transmit_time(Link(ns_from_ms(0.5), None), 10_000) == 500_000


def test_transmit_bounded_capacity():
    # 10 Kbit over 10 Mbit/s is exactly 1 ms of serialization
    assert transmit_time(Link(0, 10_000_000), 10_000) == ns_from_ms(1.0)


def test_path_delay_sum_matches_trace():
    config = small_scenario(
        arrival_mode="deterministic", firm_rate_per_s=1.0, soft_rate_per_s=0.0, horizon_s=2.0
    )
    result = run_scenario(config, 1)
    arrivals = {}
    for ev in result.trace:
        if ev.event is TraceEventType.PACKET_ARRIVED and ev.task_id == 1:
            if parse_detail(ev.detail)["kind"] == "taskup":
                arrivals[ev.node] = ev.time_ns
    created = next(
        ev.time_ns for ev in result.trace if ev.event is TraceEventType.TASK_CREATED
    )
    d = config
    assert arrivals[SW1] == created + d.delay_terminal_sw1_ns
    assert arrivals[SW2] == arrivals[SW1] + d.delay_sw1_sw2_ns
    assert arrivals[EDGE] == arrivals[SW2] + d.delay_sw2_edge_ns


# -- engine behaviour ---------------------------------------------------------

def test_zero_rate_trace_has_only_sync_and_end():
    config = small_scenario(
        firm_rate_per_s=0.0, soft_rate_per_s=0.0, horizon_s=1.0,
        offload_phases=[[0.0, 1.0, True]],
    )
    result = run_scenario(config, 1)
    assert result.trace[-1].event is TraceEventType.SIMULATION_ENDED
    for ev in result.trace[:-1]:
        assert parse_detail(ev.detail).get("kind") == "sync", ev


def test_single_firm_task_completion_time():
    # link delays zero: completion lands exactly created + 40 ms
    config = small_scenario(
        arrival_mode="deterministic",
        firm_rate_per_s=1.0,
        soft_rate_per_s=0.0,
        horizon_s=2.0,
        edge_default_service_ms=40.0,
        delay_terminal_sw1_ms=0.0,
        delay_sw1_sw2_ms=0.0,
        delay_sw2_edge_ms=0.0,
        delay_sw2_sw3_ms=0.0,
        delay_sw3_cloud_ms=0.0,
    )
    result = run_scenario(config, 1)
    created = next(ev for ev in result.trace if ev.event is TraceEventType.TASK_CREATED)
    completed = next(ev for ev in result.trace if ev.event is TraceEventType.SERVICE_COMPLETED)
    assert completed.time_ns == created.time_ns + ns_from_ms(40.0)


def test_determinism_same_seed_same_trace(mixed_result):
    from conftest import mixed_scenario

    again = run_scenario(mixed_scenario(), 3)
    assert again.trace == mixed_result.trace
    assert again.records == mixed_result.records


def test_different_seed_changes_trace(mixed_result):
    from conftest import mixed_scenario

    other = run_scenario(mixed_scenario(), 4)
    assert other.trace != mixed_result.trace


def test_conservation_per_class(mixed_result):
    created = {}
    completed = {}
    for ev in mixed_result.trace:
        if ev.event is TraceEventType.TASK_CREATED:
            created[ev.task_id] = parse_detail(ev.detail)["class"]
        elif ev.event is TraceEventType.SERVICE_COMPLETED:
            completed[ev.task_id] = parse_detail(ev.detail)["class"]
    assert set(completed) <= set(created)
    for task_id, cls in completed.items():
        assert created[task_id] == cls
    in_flight = len(created) - len(completed)
    assert in_flight >= 0
    assert len(created) == mixed_result.tasks_created


def test_causality_ordering(mixed_result):
    first_events = {}
    order = {
        TraceEventType.TASK_CREATED: 0,
        TraceEventType.SERVICE_STARTED: 2,
        TraceEventType.SERVICE_COMPLETED: 3,
    }
    times: dict[int, dict[int, int]] = {}
    sw1_up: dict[int, int] = {}
    for ev in mixed_result.trace:
        if ev.task_id == 0:
            continue
        if ev.event in order:
            times.setdefault(ev.task_id, {})[order[ev.event]] = ev.time_ns
        elif (
            ev.event is TraceEventType.PACKET_ARRIVED
            and ev.node == SW1
            and parse_detail(ev.detail)["kind"] == "taskup"
        ):
            sw1_up[ev.task_id] = ev.time_ns
    checked = 0
    for task_id, stamps in times.items():
        if len(stamps) == 3 and task_id in sw1_up:
            assert stamps[0] < sw1_up[task_id] <= stamps[2] and stamps[2] <= stamps[3]
            checked += 1
    assert checked > 100


def test_routing_invariants(mixed_result):
    classes = {}
    for ev in mixed_result.trace:
        if ev.event is TraceEventType.TASK_CREATED:
            classes[ev.task_id] = parse_detail(ev.detail)["class"]
    for ev in mixed_result.trace:
        if ev.event is TraceEventType.PACKET_ARRIVED and ev.node == SW3:
            detail = parse_detail(ev.detail)
            if detail["kind"] in ("taskup", "resultdown"):
                assert classes[ev.task_id] != "firm"  # firm never crosses switch 3
        if ev.event is TraceEventType.SERVICE_STARTED and ev.node == EDGE:
            assert parse_detail(ev.detail)["class"] != "nonrt"
        if ev.event is TraceEventType.SERVICE_STARTED and ev.node == CLOUD:
            assert parse_detail(ev.detail)["class"] != "firm"


def test_report_stacks_at_telemetry_servers(mixed_result):
    saw_ts1 = saw_ts2 = 0
    for telemetry_node, report in mixed_result.reports:
        if report.snapshot.kind is not PacketKind.TASK_UP:
            continue
        switches = [e.switch_id for e in report.snapshot.int_stack]
        if telemetry_node == TS1:
            assert switches == [1, 2]
            saw_ts1 += 1
        else:
            assert telemetry_node == TS2
            assert switches == [1, 2, 3]
            saw_ts2 += 1
    assert saw_ts1 > 0 and saw_ts2 > 0


def test_stack_timestamps_nondecreasing(mixed_result):
    for _node, report in mixed_result.reports:
        stack = report.snapshot.int_stack
        for a, b in zip(stack, stack[1:]):
            assert a.timestamp_ns <= b.timestamp_ns


def test_result_reports_come_from_sw1(mixed_result):
    for telemetry_node, report in mixed_result.reports:
        if report.snapshot.kind is PacketKind.RESULT_DOWN:
            assert telemetry_node == TS1
            assert report.reporting_switch == SW1
            assert stack_timestamp(report.snapshot.int_stack, 1) is not None


def test_telemetry_matches_trace_exactly(mixed_result):
    sw1_up = {}
    sw1_down = {}
    for ev in mixed_result.trace:
        if ev.event is TraceEventType.PACKET_ARRIVED and ev.node == SW1:
            kind = parse_detail(ev.detail)["kind"]
            if kind == "taskup":
                sw1_up[ev.task_id] = ev.time_ns
            elif kind == "resultdown":
                sw1_down[ev.task_id] = ev.time_ns
    assert len(mixed_result.records) > 0
    for record in mixed_result.records:
        expected = sw1_down[record.task_id] - sw1_up[record.task_id]
        assert record.response_time_ns == expected


def test_cloud_taskup_not_reported_at_sw2(mixed_result):
    # cloud-bound packets pass switch 2 still stamped; only switch 3 reports them
    for telemetry_node, report in mixed_result.reports:
        if report.snapshot.kind is PacketKind.TASK_UP and telemetry_node == TS1:
            assert report.reporting_switch == SW2
            assert stack_timestamp(report.snapshot.int_stack, 3) is None


def test_decision_convergence_bound():
    config = small_scenario(
        horizon_s=20.0,
        firm_rate_per_s=20.0,
        soft_rate_per_s=20.0,
        edge_service_windows=[[5.0, 15.0, 40.0]],
        offload_phases=[[0.0, 20.0, True]],
    )
    result = run_scenario(config, 9)
    flips = [t for t, dest, _seq in result.decision_changes if dest is Destination.CLOUD]
    assert flips, "expected the controller to flip to the cloud under load"
    flip_ns = flips[0]
    notify_delay = (
        config.delay_sw2_edge_ns + config.delay_sw1_sw2_ns + config.delay_terminal_sw1_ns
    )
    # next notify tick after the flip, plus its one-way flight to the terminal
    period = config.notify_period_ns
    converged = (flip_ns // period + 1) * period + notify_delay
    back = next(
        (t for t, dest, _seq in result.decision_changes if dest is Destination.EDGE and t > flip_ns),
        config.horizon_ns,
    )
    for ev in result.trace:
        if ev.event is TraceEventType.TASK_CREATED and converged < ev.time_ns <= back:
            detail = parse_detail(ev.detail)
            if detail["class"] == "soft":
                assert detail["dest"] == "cloud"


def test_soft_behaves_like_firm_when_offloading_disabled():
    config = small_scenario(
        horizon_s=6.0,
        edge_service_windows=[[1.0, 6.0, 40.0]],
        offload_phases=[[0.0, 6.0, False]],
    )
    result = run_scenario(config, 5)
    for ev in result.trace:
        if ev.event is TraceEventType.TASK_CREATED:
            assert parse_detail(ev.detail)["dest"] == "edge"
    for telemetry_node, _report in result.reports:
        assert telemetry_node != TS2  # nothing ever crossed toward the cloud


def test_notification_sequence_monotone_per_terminal(mixed_result):
    last_seq: dict[NodeId, int] = {}
    applied = 0
    for ev in mixed_result.trace:
        if ev.event is TraceEventType.NOTIFICATION_APPLIED:
            seq = int(parse_detail(ev.detail)["seq"])
            assert seq > last_seq.get(ev.node, 0)
            last_seq[ev.node] = seq
            applied += 1
    assert applied > 0


def test_fifo_mode_serializes_service():
    config = small_scenario(
        arrival_mode="deterministic",
        firm_rate_per_s=50.0,
        soft_rate_per_s=0.0,
        horizon_s=1.0,
        edge_fifo=True,
        edge_capacity_tasks_per_s=10,  # service pinned to >= 100 ms per task
        edge_default_service_ms=1.0,
    )
    result = run_scenario(config, 1)
    starts = [ev.time_ns for ev in result.trace
              if ev.event is TraceEventType.SERVICE_STARTED and ev.node == EDGE]
    for a, b in zip(starts, starts[1:]):
        assert b - a >= ns_from_ms(100.0)


def test_reclassified_nonrt_marked_in_trace():
    config = small_scenario(
        firm_rate_per_s=0.0,
        soft_rate_per_s=0.0,
        nonrt_rate_per_s=5.0,
        horizon_s=2.0,
    )
    result = run_scenario(config, 2)
    created = [ev for ev in result.trace if ev.event is TraceEventType.TASK_CREATED]
    assert created
    # an idle edge promotes non-real-time work to soft
    for ev in created:
        detail = parse_detail(ev.detail)
        assert detail["class"] == "soft"
        assert detail["from"] == "nonrt"


# -- cpu utilization ----------------------------------------------------------

@pytest.mark.parametrize(
    "arrivals,capacity,expected_user",
    [(0, 100, 0.0), (50, 100, 0.5), (200, 100, 1.0)],
)
def test_edge_cpu_utilization(arrivals, capacity, expected_user):
    user_app, system = edge_cpu_utilization(arrivals, capacity)
    assert user_app == expected_user
    assert system == 0.05


def test_cpu_metrics_emitted_once_per_second():
    config = small_scenario(horizon_s=3.5)
    result = run_scenario(config, 1)
    user = [m for m in result.metrics if m[1] == "user_app"]
    system = [m for m in result.metrics if m[1] == "system"]
    assert [t for t, _c, _v in user] == [10**9, 2 * 10**9, 3 * 10**9]
    assert all(v == 0.05 for _t, _c, v in system)


def test_default_topology_matches_reference_layout():
    config = small_scenario()
    topology = build_topology(config)
    assert topology.up_route(Destination.EDGE) == (SW1, SW2, EDGE)
    assert topology.up_route(Destination.CLOUD) == (SW1, SW2, SW3, CLOUD)
    assert topology.report_points == {SW2: TS1, SW3: TS2, SW1: TS1}
    assert (SW2, SW3) in topology.links
    assert topology.links[(SW2, SW3)].delay_ns == ns_from_ms(2.0)
