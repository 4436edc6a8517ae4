"""Deterministic discrete-event engine for the terminal/fabric/server topology.

Topology (default): terminals attach to switch 1; switch 2 fans out to the
edge server and to switch 3, which fronts the cloud server. Switch 2 mirrors
task packets bound for the edge to telemetry server 1 and switch 3 mirrors
cloud-bound ones to telemetry server 2; switch 1 mirrors result packets to
telemetry server 1 so response times can be measured there. Every mirror point
strips the timestamp stack before the next timestamp-unaware hop.

Events at equal times are ordered by (node, event code, task id, insertion
sequence), so a (scenario, seed) pair always yields the same trace.
"""

from __future__ import annotations

import csv
import enum
import random
from collections import deque
from dataclasses import dataclass
from heapq import heappop, heappush
from pathlib import Path
from typing import NamedTuple

from . import offload
from .scenario import ScenarioConfig
from .tasks import (
    NS_PER_S,
    Destination,
    NodeId,
    NodeKind,
    PacketKind,
    TaskClass,
    TaskIdGenerator,
)
from .telemetry import MetricSample, MonitoringRecord, ReportStore
from .wire import TelemetryReport, WirePacket, push_timestamp, strip_and_copy


class Link(NamedTuple):
    delay_ns: int
    capacity_bits_per_s: int | None


@dataclass(frozen=True, slots=True)
class Topology:
    terminals: tuple[NodeId, ...]
    sw1: NodeId
    sw2: NodeId
    sw3: NodeId
    edge: NodeId
    cloud: NodeId
    telemetry_edge: NodeId
    telemetry_cloud: NodeId
    links: dict[tuple[NodeId, NodeId], Link]
    report_points: dict[NodeId, NodeId]

    def up_route(self, destination: Destination) -> tuple[NodeId, ...]:
        if destination is Destination.EDGE:
            return (self.sw1, self.sw2, self.edge)
        return (self.sw1, self.sw2, self.sw3, self.cloud)

    def down_route(self, server: NodeId, terminal: NodeId) -> tuple[NodeId, ...]:
        if server == self.edge:
            return (self.sw2, self.sw1, terminal)
        return (self.sw3, self.sw2, self.sw1, terminal)

    def switch_route(self, destination: Destination) -> tuple[NodeId, ...]:
        if destination is Destination.EDGE:
            return (self.sw1, self.sw2)
        return (self.sw1, self.sw2, self.sw3)


def build_topology(config: ScenarioConfig) -> Topology:
    terminals = tuple(NodeId(NodeKind.TERMINAL, i) for i in range(config.terminals))
    sw1 = NodeId(NodeKind.SWITCH, 1)
    sw2 = NodeId(NodeKind.SWITCH, 2)
    sw3 = NodeId(NodeKind.SWITCH, 3)
    edge = NodeId(NodeKind.EDGE_SERVER, 0)
    cloud = NodeId(NodeKind.CLOUD_SERVER, 0)
    ts1 = NodeId(NodeKind.TELEMETRY_SERVER, 1)
    ts2 = NodeId(NodeKind.TELEMETRY_SERVER, 2)
    links: dict[tuple[NodeId, NodeId], Link] = {}

    def both(a: NodeId, b: NodeId, delay_ns: int) -> None:
        links[(a, b)] = Link(delay_ns, None)
        links[(b, a)] = Link(delay_ns, None)

    for terminal in terminals:
        both(terminal, sw1, config.delay_terminal_sw1_ns)
    both(sw1, sw2, config.delay_sw1_sw2_ns)
    both(sw2, edge, config.delay_sw2_edge_ns)
    both(sw2, sw3, config.delay_sw2_sw3_ns)
    both(sw3, cloud, config.delay_sw3_cloud_ns)
    # sw1 reports result packets so the response time is observable there
    report_points = {sw2: ts1, sw3: ts2, sw1: ts1}
    return Topology(terminals, sw1, sw2, sw3, edge, cloud, ts1, ts2, links, report_points)


@dataclass(frozen=True, slots=True)
class ServiceWindow:
    start_ns: int
    end_ns: int
    service_ns: int


@dataclass(frozen=True, slots=True)
class ServiceSchedule:
    windows: tuple[ServiceWindow, ...]
    default_service_ns: int

    def service_time(self, t_ns: int) -> int:
        for window in self.windows:
            if window.start_ns <= t_ns < window.end_ns:
                return window.service_ns
        return self.default_service_ns


@dataclass(frozen=True, slots=True)
class ServerModel:
    node: NodeId
    schedule: ServiceSchedule
    capacity_tasks_per_s: int | None
    fifo: bool

    def service_duration(self, start_ns: int) -> int:
        duration = self.schedule.service_time(start_ns)
        if self.fifo and self.capacity_tasks_per_s is not None:
            duration = max(duration, NS_PER_S // self.capacity_tasks_per_s)
        return duration


def edge_cpu_utilization(
    arrivals_last_second: int, capacity_tasks_per_s: int | None, system_load: float = 0.05
) -> tuple[float, float]:
    """(user_app, system) utilization fractions for one metric sample."""
    if capacity_tasks_per_s is None:
        return 0.0, system_load
    return min(1.0, arrivals_last_second / capacity_tasks_per_s), system_load


def transmit_time(link: Link, payload_bits: int) -> int:
    """One-way latency over a link: propagation plus serialization when bounded."""
    delay = link.delay_ns
    if link.capacity_bits_per_s is not None:
        delay += payload_bits * NS_PER_S // link.capacity_bits_per_s
    return delay


class TraceEventType(enum.IntEnum):
    TASK_CREATED = 0
    PACKET_SENT = 1
    PACKET_ARRIVED = 2
    SERVICE_STARTED = 3
    SERVICE_COMPLETED = 4
    REPORT_EMITTED = 5
    NOTIFICATION_APPLIED = 6
    SIMULATION_ENDED = 7

    @property
    def label(self) -> str:
        return _EVENT_LABELS[self]


_EVENT_LABELS = {
    TraceEventType.TASK_CREATED: "task_created",
    TraceEventType.PACKET_SENT: "packet_sent",
    TraceEventType.PACKET_ARRIVED: "packet_arrived",
    TraceEventType.SERVICE_STARTED: "service_started",
    TraceEventType.SERVICE_COMPLETED: "service_completed",
    TraceEventType.REPORT_EMITTED: "report_emitted",
    TraceEventType.NOTIFICATION_APPLIED: "notification_applied",
    TraceEventType.SIMULATION_ENDED: "simulation_ended",
}


class TraceEvent(NamedTuple):
    time_ns: int
    node: NodeId
    event: TraceEventType
    task_id: int
    detail: str


EventTrace = list[TraceEvent]


def write_trace_csv(trace: EventTrace, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["time_ns", "node", "event", "task_id", "detail"])
        for time_ns, node, event, task_id, detail in trace:
            writer.writerow([time_ns, node.label, event.label, task_id, detail])


@dataclass(slots=True)
class InFlight:
    """A packet travelling the fabric plus engine-side routing metadata."""

    packet: WirePacket
    route: tuple[NodeId, ...]  # remaining hops, starting with the node in transit to
    source: NodeId
    notify_body: bytes | None = None


@dataclass(slots=True)
class SimulationResult:
    config: ScenarioConfig
    seed: int
    trace: EventTrace
    records: list[MonitoringRecord]
    reports: list[tuple[NodeId, TelemetryReport]]
    metrics: list[MetricSample]
    decision_changes: list[tuple[int, Destination, int]]
    duplicate_reports: int
    evicted_reports: int
    tasks_created: int


def splitmix64(x: int) -> int:
    """One SplitMix64 step; used to derive independent per-stream seeds."""
    x = (x + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return z ^ (z >> 31)


# internal event codes; relative order breaks ties at equal (time, node)
_EV_CREATE = 0
_EV_ARRIVE = 1
_EV_SVC_START = 2
_EV_SVC_DONE = 3
_EV_SYNC = 4
_EV_NOTIFY = 5
_EV_METRIC = 6
_EV_END = 7


class _Stream:
    """One arrival stream (terminal x class) with its own derived RNG."""

    __slots__ = ("terminal_index", "task_class", "rate", "rng", "interval_ns")

    def __init__(self, terminal_index: int, task_class: TaskClass, rate: float, seed: int, mode: str):
        self.terminal_index = terminal_index
        self.task_class = task_class
        self.rate = rate
        if mode == "deterministic":
            self.rng = None
            self.interval_ns = max(1, round(NS_PER_S / rate))
        else:
            self.rng = random.Random(seed)
            self.interval_ns = 0

    def next_gap(self) -> int:
        if self.rng is None:
            return self.interval_ns
        return max(1, round(self.rng.expovariate(self.rate) * NS_PER_S))


class _Engine:
    def __init__(self, config: ScenarioConfig, seed: int):
        self.cfg = config
        self.seed = seed
        self.topology = build_topology(config)
        self.edge_model = ServerModel(
            self.topology.edge,
            ServiceSchedule(
                tuple(ServiceWindow(*w) for w in config.edge_windows),
                config.edge_default_service_ns,
            ),
            config.edge_capacity,
            config.edge_fifo,
        )
        self.cloud_model = ServerModel(
            self.topology.cloud,
            ServiceSchedule(
                tuple(ServiceWindow(*w) for w in config.cloud_windows),
                config.cloud_default_service_ns,
            ),
            config.cloud_capacity,
            config.cloud_fifo,
        )
        self.models = {self.topology.edge: self.edge_model, self.topology.cloud: self.cloud_model}
        self.routes = {
            Destination.EDGE: self.topology.switch_route(Destination.EDGE),
            Destination.CLOUD: self.topology.switch_route(Destination.CLOUD),
        }
        self.heap: list = []
        self.heap_seq = 0
        self.trace: EventTrace = []
        self.records: list[MonitoringRecord] = []
        self.reports: list[tuple[NodeId, TelemetryReport]] = []
        self.metrics: list[MetricSample] = []
        self.store = ReportStore(
            reference_switch_id=self.topology.sw1.index,
            cloud_switch_id=self.topology.sw3.index,
            eviction_ns=config.eviction_ns,
        )
        self.estimator = offload.RtEstimator(config.estimator_window)
        self.decision_seq = 0
        self.current_decision = offload.OffloadDecision(
            Destination.EDGE, self.routes[Destination.EDGE], 0, 0
        )
        self.decision_changes: list[tuple[int, Destination, int]] = []
        self.terminal_states = [
            offload.initial_policy_state(self.routes[Destination.EDGE])
            for _ in range(config.terminals)
        ]
        self.id_gen = TaskIdGenerator()
        self.free_at: dict[NodeId, int] = {}
        self.edge_arrivals: deque[int] = deque()
        self.streams: list[_Stream] = []
        rates = [
            (TaskClass.FIRM, config.firm_rate),
            (TaskClass.SOFT, config.soft_rate),
            (TaskClass.NON_REAL_TIME, config.nonrt_rate),
        ]
        stream_no = 0
        for terminal_index in range(config.terminals):
            for task_class, rate in rates:
                if rate > 0:
                    stream_seed = splitmix64(seed ^ splitmix64(stream_no))
                    self.streams.append(
                        _Stream(terminal_index, task_class, rate, stream_seed, config.arrival_mode)
                    )
                stream_no += 1
        self._detail_cache: dict = {}

    # -- event plumbing ----------------------------------------------------

    def _push(self, time_ns: int, node_order: int, code: int, task_id: int, payload) -> None:
        self.heap_seq += 1
        heappush(self.heap, (time_ns, node_order, code, task_id, self.heap_seq, payload))

    def _log(self, time_ns: int, node: NodeId, event: TraceEventType, task_id: int, detail: str) -> None:
        self.trace.append(TraceEvent(time_ns, node, event, task_id, detail))

    def _arrival_detail(self, packet: WirePacket) -> str:
        key = (packet.kind, packet.task_class)
        detail = self._detail_cache.get(key)
        if detail is None:
            detail = f"kind={packet.kind.label}"
            if packet.task_class is not None:
                detail += f" class={packet.task_class.label}"
            self._detail_cache[key] = detail
        return detail

    def _sent_detail(self, packet: WirePacket, destination: Destination | None) -> str:
        key = (packet.kind, packet.task_class, destination, "sent")
        detail = self._detail_cache.get(key)
        if detail is None:
            detail = f"kind={packet.kind.label}"
            if packet.task_class is not None:
                detail += f" class={packet.task_class.label}"
            if destination is not None:
                detail += f" dest={destination.label}"
            self._detail_cache[key] = detail
        return detail

    def _send(
        self,
        time_ns: int,
        from_node: NodeId,
        flight: InFlight,
        destination: Destination | None = None,
        log_sent: bool = False,
    ) -> None:
        next_node = flight.route[0]
        link = self.topology.links[(from_node, next_node)]
        if log_sent:
            self._log(
                time_ns,
                from_node,
                TraceEventType.PACKET_SENT,
                flight.packet.task_id,
                self._sent_detail(flight.packet, destination),
            )
        arrival = time_ns + transmit_time(link, flight.packet.payload_bits)
        self._push(arrival, next_node.order_key, _EV_ARRIVE, flight.packet.task_id, flight)

    # -- node behaviour ----------------------------------------------------

    def _handle_create(self, time_ns: int, stream_index: int) -> None:
        stream = self.streams[stream_index]
        next_time = time_ns + stream.next_gap()
        if next_time < self.cfg.horizon_ns:
            terminal = self.topology.terminals[stream.terminal_index]
            self._push(next_time, terminal.order_key, _EV_CREATE, 0, stream_index)

        terminal = self.topology.terminals[stream.terminal_index]
        task_class = stream.task_class
        reclassified = False
        if task_class is TaskClass.NON_REAL_TIME:
            promoted = offload.reclassify_nonrt(self._edge_idle(time_ns), task_class)
            reclassified = promoted is not task_class
            task_class = promoted
        state = self.terminal_states[stream.terminal_index]
        if task_class is TaskClass.SOFT and not self.cfg.enabled_at(time_ns):
            active = Destination.EDGE  # offloading off: soft behaves like firm
        else:
            active = state.active_destination
        destination = offload.route_for(task_class, active)
        task_id = self.id_gen.next_id()

        key = (task_class, destination, reclassified)
        detail = self._detail_cache.get(key)
        if detail is None:
            detail = f"class={task_class.label} dest={destination.label}"
            if reclassified:
                detail += " from=nonrt"
            self._detail_cache[key] = detail
        self._log(time_ns, terminal, TraceEventType.TASK_CREATED, task_id, detail)

        packet = WirePacket(PacketKind.TASK_UP, task_class, task_id, self.cfg.task_bits, ())
        route = self.topology.up_route(destination)
        self._send(time_ns, terminal, InFlight(packet, route, terminal), destination, log_sent=True)

    def _handle_arrive(self, time_ns: int, flight: InFlight) -> None:
        node = flight.route[0]
        packet = flight.packet
        self._log(
            time_ns, node, TraceEventType.PACKET_ARRIVED, packet.task_id, self._arrival_detail(packet)
        )
        kind = node.kind
        if kind is NodeKind.SWITCH:
            stamped = push_timestamp(packet, node.index, time_ns)
            rest = flight.route[1:]
            if rest[0].kind is NodeKind.SWITCH:
                outgoing = stamped
            else:
                outgoing, report = strip_and_copy(stamped, node, time_ns)
                telemetry_node = self.topology.report_points.get(node)
                if telemetry_node is not None:
                    self._deliver_report(time_ns, node, telemetry_node, report)
            self._send(time_ns, node, InFlight(outgoing, rest, flight.source, flight.notify_body))
        elif kind is NodeKind.EDGE_SERVER or kind is NodeKind.CLOUD_SERVER:
            if packet.kind is PacketKind.TASK_UP:
                self._server_arrive(time_ns, node, flight)
            # sync packets are absorbed by the cloud server
        else:  # terminal
            if packet.kind is PacketKind.NOTIFY:
                self._apply_notification(time_ns, node, flight)
            # result packets terminate at the application

    def _server_arrive(self, time_ns: int, node: NodeId, flight: InFlight) -> None:
        if node.kind is NodeKind.EDGE_SERVER:
            self.edge_arrivals.append(time_ns)
        model = self.models[node]
        if model.fifo:
            start = max(self.free_at.get(node, 0), time_ns)
            duration = model.service_duration(start)
            self.free_at[node] = start + duration
        else:
            start = time_ns
            duration = model.service_duration(start)
        done = start + duration
        task_class = flight.packet.task_class
        key = (task_class, "svc")
        detail = self._detail_cache.get(key)
        if detail is None:
            detail = f"class={task_class.label}"
            self._detail_cache[key] = detail
        self._push(start, node.order_key, _EV_SVC_START, flight.packet.task_id, detail)
        self._push(done, node.order_key, _EV_SVC_DONE, flight.packet.task_id, flight)

    def _handle_svc_done(self, time_ns: int, node: NodeId, flight: InFlight) -> None:
        packet = flight.packet
        task_class = packet.task_class
        self._log(
            time_ns,
            node,
            TraceEventType.SERVICE_COMPLETED,
            packet.task_id,
            self._detail_cache[(task_class, "svc")],
        )
        result = WirePacket(
            PacketKind.RESULT_DOWN, task_class, packet.task_id, self.cfg.result_bits, ()
        )
        route = self.topology.down_route(node, flight.source)
        self._send(time_ns, node, InFlight(result, route, node), log_sent=True)

    def _deliver_report(
        self, time_ns: int, switch: NodeId, telemetry_node: NodeId, report: TelemetryReport
    ) -> None:
        snapshot = report.snapshot
        key = (snapshot.kind, telemetry_node, "report")
        detail = self._detail_cache.get(key)
        if detail is None:
            detail = f"kind={snapshot.kind.label} to={telemetry_node.label}"
            self._detail_cache[key] = detail
        self._log(time_ns, switch, TraceEventType.REPORT_EMITTED, snapshot.task_id, detail)
        self.reports.append((telemetry_node, report))
        if snapshot.kind in (PacketKind.TASK_UP, PacketKind.RESULT_DOWN):
            record = self.store.ingest(report)
            if record is not None:
                self.records.append(record)
                self._controller_observe(time_ns, record)

    def _controller_observe(self, time_ns: int, record: MonitoringRecord) -> None:
        if record.destination is not Destination.EDGE:
            return
        self.estimator.add(record.response_time_ns)
        self.decision_seq += 1
        decision = offload.decide(
            self.estimator,
            self.cfg.threshold_ns,
            sequence_no=self.decision_seq,
            decided_at_ns=time_ns,
            routes=self.routes,
        )
        if decision.soft_destination is not self.current_decision.soft_destination:
            self.decision_changes.append((time_ns, decision.soft_destination, decision.sequence_no))
        self.current_decision = decision

    def _apply_notification(self, time_ns: int, terminal: NodeId, flight: InFlight) -> None:
        state = self.terminal_states[terminal.index]
        new_state, applied = offload.apply_notification(
            state, flight.packet, flight.notify_body, time_ns, self.routes
        )
        self.terminal_states[terminal.index] = new_state
        if applied:
            decision = new_state.active_decision
            self._log(
                time_ns,
                terminal,
                TraceEventType.NOTIFICATION_APPLIED,
                0,
                f"dest={decision.soft_destination.label} seq={decision.sequence_no}",
            )

    def _handle_sync(self, time_ns: int) -> None:
        packet = WirePacket(PacketKind.SYNC, None, 0, self.cfg.sync_bits, ())
        edge = self.topology.edge
        route = (self.topology.sw2, self.topology.sw3, self.topology.cloud)
        self._send(time_ns, edge, InFlight(packet, route, edge), log_sent=True)

    def _handle_notify(self, time_ns: int) -> None:
        if self.current_decision.sequence_no == 0:
            return  # nothing decided yet; terminals hold the cold-start default
        packet, body = offload.make_notification(self.current_decision, self.cfg.notify_bits)
        edge = self.topology.edge
        for terminal in self.topology.terminals:
            route = (self.topology.sw2, self.topology.sw1, terminal)
            self._send(time_ns, edge, InFlight(packet, route, edge, body), log_sent=True)

    def _prune_edge_arrivals(self, time_ns: int) -> None:
        cutoff = time_ns - NS_PER_S
        arrivals = self.edge_arrivals
        while arrivals and arrivals[0] <= cutoff:
            arrivals.popleft()

    def _edge_idle(self, time_ns: int) -> bool:
        capacity = self.edge_model.capacity_tasks_per_s
        if capacity is None:
            return False
        self._prune_edge_arrivals(time_ns)
        return len(self.edge_arrivals) < 0.1 * capacity

    def _handle_metric(self, time_ns: int) -> None:
        self._prune_edge_arrivals(time_ns)
        user_app, system = edge_cpu_utilization(
            len(self.edge_arrivals), self.edge_model.capacity_tasks_per_s
        )
        self.metrics.append((time_ns, "user_app", user_app))
        self.metrics.append((time_ns, "system", system))

    # -- main loop ----------------------------------------------------------

    def _schedule_initial(self) -> None:
        horizon = self.cfg.horizon_ns
        for index, stream in enumerate(self.streams):
            first = stream.next_gap()
            if first < horizon:
                terminal = self.topology.terminals[stream.terminal_index]
                self._push(first, terminal.order_key, _EV_CREATE, 0, index)
        edge_order = self.topology.edge.order_key
        for start, end, enabled in self.cfg.phases:
            if not enabled:
                continue
            stop = min(end, horizon)
            t = start
            while t < stop:
                self._push(t, edge_order, _EV_SYNC, 0, None)
                t += self.cfg.sync_period_ns
            t = start
            while t < stop:
                self._push(t, edge_order, _EV_NOTIFY, 0, None)
                t += self.cfg.notify_period_ns
        t = NS_PER_S
        while t < horizon:
            self._push(t, edge_order, _EV_METRIC, 0, None)
            t += NS_PER_S
        self._push(horizon, -1, _EV_END, 0, None)

    def run(self) -> SimulationResult:
        self._schedule_initial()
        heap = self.heap
        while heap:
            time_ns, _order, code, _task_id, _seq, payload = heappop(heap)
            if code == _EV_ARRIVE:
                self._handle_arrive(time_ns, payload)
            elif code == _EV_CREATE:
                self._handle_create(time_ns, payload)
            elif code == _EV_SVC_START:
                # payload is the prebuilt detail string; node recovered from the order key
                self._log(
                    time_ns,
                    self._node_from_order(_order),
                    TraceEventType.SERVICE_STARTED,
                    _task_id,
                    payload,
                )
            elif code == _EV_SVC_DONE:
                self._handle_svc_done(time_ns, self._node_from_order(_order), payload)
            elif code == _EV_SYNC:
                self._handle_sync(time_ns)
            elif code == _EV_NOTIFY:
                self._handle_notify(time_ns)
            elif code == _EV_METRIC:
                self._handle_metric(time_ns)
            else:  # _EV_END
                self._log(
                    self.cfg.horizon_ns,
                    self.topology.edge,
                    TraceEventType.SIMULATION_ENDED,
                    0,
                    "",
                )
                break
        return SimulationResult(
            config=self.cfg,
            seed=self.seed,
            trace=self.trace,
            records=self.records,
            reports=self.reports,
            metrics=self.metrics,
            decision_changes=self.decision_changes,
            duplicate_reports=self.store.duplicate_count,
            evicted_reports=self.store.evicted_count,
            tasks_created=self.id_gen.issued,
        )

    def _node_from_order(self, order_key: int) -> NodeId:
        return NodeId(NodeKind(order_key >> 16), order_key & 0xFFFF)


def run_scenario(config: ScenarioConfig, seed: int | None = None) -> SimulationResult:
    """Execute a validated scenario deterministically; same inputs, same trace."""
    config.validate()
    actual_seed = config.seed if seed is None else seed
    return _Engine(config, actual_seed).run()
