"""Telemetry-server logic: correlate task/result reports by id, derive response
times and per-hop delays, aggregate delay histograms, publish the JSON feed.

Response time for a task is the difference between the reference switch's
timestamp on the result packet and on the task packet, exactly as carried in
the two snapshots' stacks.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable

from .tasks import NS_PER_S, Destination, ms_from_ns
from .wire import IntEntry, PacketKind, TelemetryReport

HopDelay = tuple[int, int, int]  # (from_switch, to_switch, delay_ns)


class TelemetryError(ValueError):
    pass


class MalformedReportError(TelemetryError):
    pass


@dataclass(frozen=True, slots=True)
class MonitoringRecord:
    task_id: int
    response_time_ns: int
    destination: Destination
    hop_delays: tuple[HopDelay, ...]
    completed_at_ns: int


def stack_timestamp(stack: tuple[IntEntry, ...], switch_id: int) -> int | None:
    """Timestamp of the first entry stamped by `switch_id`, if any."""
    for entry in stack:
        if entry.switch_id == switch_id:
            return entry.timestamp_ns
    return None


def hop_delays(stack: tuple[IntEntry, ...]) -> list[HopDelay]:
    """Consecutive-pair timestamp differences; empty for stacks shorter than 2."""
    return [
        (a.switch_id, b.switch_id, b.timestamp_ns - a.timestamp_ns)
        for a, b in zip(stack, stack[1:])
    ]


def span_delay(stack: tuple[IntEntry, ...]) -> HopDelay | None:
    """First-to-last timestamp difference for stacks of 3 or more entries."""
    if len(stack) < 3:
        return None
    first, last = stack[0], stack[-1]
    return (first.switch_id, last.switch_id, last.timestamp_ns - first.timestamp_ns)


class ReportStore:
    """Pairs task and result reports by task id and emits monitoring records.

    Duplicates of an already-stored direction are rejected and counted.
    Unmatched reports older than the eviction horizon are dropped and counted.
    """

    def __init__(
        self,
        reference_switch_id: int = 1,
        cloud_switch_id: int = 3,
        eviction_ns: int = 10 * NS_PER_S,
    ) -> None:
        self.reference_switch_id = reference_switch_id
        self.cloud_switch_id = cloud_switch_id
        self.eviction_ns = eviction_ns
        self.duplicate_count = 0
        self.evicted_count = 0
        # task_id -> [task_report | None, result_report | None, first_seen_ns]
        self._pending: dict[int, list] = {}

    def __len__(self) -> int:
        return len(self._pending)

    def ingest(self, report: TelemetryReport) -> MonitoringRecord | None:
        snapshot = report.snapshot
        if snapshot.kind not in (PacketKind.TASK_UP, PacketKind.RESULT_DOWN):
            raise TelemetryError(f"cannot ingest {snapshot.kind.label} report")
        if stack_timestamp(snapshot.int_stack, self.reference_switch_id) is None:
            raise MalformedReportError(
                f"report for task {snapshot.task_id} lacks a switch-"
                f"{self.reference_switch_id} timestamp"
            )
        self._evict(report.report_time_ns)
        slot = self._pending.get(snapshot.task_id)
        if slot is None:
            slot = [None, None, report.report_time_ns]
            self._pending[snapshot.task_id] = slot
        direction = 0 if snapshot.kind is PacketKind.TASK_UP else 1
        if slot[direction] is not None:
            self.duplicate_count += 1
            return None
        slot[direction] = report
        if slot[0] is None or slot[1] is None:
            return None
        del self._pending[snapshot.task_id]
        return self._pair(slot[0], slot[1])

    def _pair(self, task_report: TelemetryReport, result_report: TelemetryReport) -> MonitoringRecord:
        task_stack = task_report.snapshot.int_stack
        result_stack = result_report.snapshot.int_stack
        t_up = stack_timestamp(task_stack, self.reference_switch_id)
        t_down = stack_timestamp(result_stack, self.reference_switch_id)
        destination = (
            Destination.CLOUD
            if stack_timestamp(task_stack, self.cloud_switch_id) is not None
            else Destination.EDGE
        )
        return MonitoringRecord(
            task_id=task_report.snapshot.task_id,
            response_time_ns=t_down - t_up,
            destination=destination,
            hop_delays=tuple(hop_delays(task_stack)),
            completed_at_ns=t_down,
        )

    def _evict(self, now_ns: int) -> None:
        cutoff = now_ns - self.eviction_ns
        if cutoff <= 0:
            return
        stale = [tid for tid, slot in self._pending.items() if slot[2] < cutoff]
        for tid in stale:
            del self._pending[tid]
        self.evicted_count += len(stale)


@dataclass(slots=True)
class DelayHistogram:
    hop: tuple[int, int]
    bin_width_ns: int
    counts: dict[int, int] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def add(self, delay_ns: int) -> None:
        index = delay_ns // self.bin_width_ns
        self.counts[index] = self.counts.get(index, 0) + 1


def build_histogram(
    delays: Iterable[int], hop: tuple[int, int], bin_width_ns: int
) -> DelayHistogram:
    if bin_width_ns <= 0:
        raise TelemetryError(f"bin width must be positive, got {bin_width_ns}")
    hist = DelayHistogram(hop, bin_width_ns)
    for delay in delays:
        hist.add(delay)
    return hist


def collect_hop_observations(reports: Iterable[TelemetryReport]) -> list[HopDelay]:
    """Hop delays from reported task and result stacks: consecutive pairs plus,
    for stacks of three or more switches, the first-to-last span."""
    observations: list[HopDelay] = []
    for report in reports:
        snapshot = report.snapshot
        if snapshot.kind not in (PacketKind.TASK_UP, PacketKind.RESULT_DOWN):
            continue
        stack = snapshot.int_stack
        observations.extend(hop_delays(stack))
        span = span_delay(stack)
        if span is not None:
            observations.append(span)
    return observations


def build_histograms(
    observations: Iterable[HopDelay], bin_width_ns: int
) -> dict[tuple[int, int], DelayHistogram]:
    if bin_width_ns <= 0:
        raise TelemetryError(f"bin width must be positive, got {bin_width_ns}")
    histograms: dict[tuple[int, int], DelayHistogram] = {}
    for from_switch, to_switch, delay_ns in observations:
        hop = (from_switch, to_switch)
        hist = histograms.get(hop)
        if hist is None:
            hist = histograms[hop] = DelayHistogram(hop, bin_width_ns)
        hist.add(delay_ns)
    return histograms


MetricSample = tuple[int, str, float]  # (t_ns, component, value)


def publish_feed(
    records: Iterable[MonitoringRecord], metrics: Iterable[MetricSample] = ()
) -> dict:
    """Build the JSON monitoring feed document (floats rounded to 3 decimals)."""
    record_rows = [
        {
            "task_id": rec.task_id,
            "response_time_ms": ms_from_ns(rec.response_time_ns),
            "destination": rec.destination.label,
            "hops": [
                {"from": f, "to": t, "delay_ms": ms_from_ns(d)} for f, t, d in rec.hop_delays
            ],
            "completed_at_ms": ms_from_ns(rec.completed_at_ns),
        }
        for rec in sorted(records, key=lambda r: (r.completed_at_ns, r.task_id))
    ]
    metric_rows = [
        {"t_ms": ms_from_ns(t_ns), "component": component, "cpu": round(value, 3)}
        for t_ns, component, value in metrics
    ]
    return {"records": record_rows, "metrics": metric_rows}


_RECORD_KEYS = {"task_id", "response_time_ms", "destination", "hops", "completed_at_ms"}
_HOP_KEYS = {"from", "to", "delay_ms"}
_METRIC_KEYS = {"t_ms", "component", "cpu"}


def parse_feed(text: str) -> tuple[list[dict], list[dict]]:
    """Validate and return (records, metrics) from a feed document."""
    doc = json.loads(text)
    if not isinstance(doc, dict) or set(doc) != {"records", "metrics"}:
        raise TelemetryError("feed must be an object with 'records' and 'metrics'")
    records = doc["records"]
    metrics = doc["metrics"]
    previous = None
    for row in records:
        if set(row) != _RECORD_KEYS:
            raise TelemetryError(f"bad record keys: {sorted(row)}")
        if row["destination"] not in ("edge", "cloud"):
            raise TelemetryError(f"bad destination: {row['destination']}")
        for hop in row["hops"]:
            if set(hop) != _HOP_KEYS:
                raise TelemetryError(f"bad hop keys: {sorted(hop)}")
        if previous is not None and row["completed_at_ms"] < previous:
            raise TelemetryError("records not sorted by completion time")
        previous = row["completed_at_ms"]
    for row in metrics:
        if set(row) != _METRIC_KEYS:
            raise TelemetryError(f"bad metric keys: {sorted(row)}")
        if row["component"] not in ("user_app", "system"):
            raise TelemetryError(f"bad metric component: {row['component']}")
    return records, metrics
