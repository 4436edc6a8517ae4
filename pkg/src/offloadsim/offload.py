"""Dynamic offloading controller: classification, threshold decision, notifications.

Soft real-time tasks follow the currently advertised destination; firm tasks are
pinned to the edge and non-real-time tasks to the cloud. The controller flips
the soft destination by comparing a sliding-window mean of edge-path response
times against a fixed threshold (edge wins ties).
"""

from __future__ import annotations

import enum
import struct
from collections import deque
from dataclasses import dataclass, replace

from .tasks import Destination, NodeId, TaskClass
from .wire import PacketKind, WirePacket


class AppAction(enum.Enum):
    ATTACK = "attack"
    ITEM_USE = "item_use"
    MONSTER_SELECT = "monster_select"
    CUSTOM = "custom"


@dataclass(frozen=True, slots=True)
class TaskDescriptor:
    action: AppAction
    custom_class_hint: TaskClass | None = None


def classify(descriptor: TaskDescriptor) -> TaskClass:
    """Map an application action to its task class."""
    if descriptor.action is AppAction.ATTACK:
        return TaskClass.FIRM
    if descriptor.action is AppAction.ITEM_USE:
        return TaskClass.SOFT
    if descriptor.action is AppAction.MONSTER_SELECT:
        return TaskClass.NON_REAL_TIME
    if descriptor.custom_class_hint is None:
        raise ValueError("custom action requires a task class hint")
    return descriptor.custom_class_hint


def reclassify_nonrt(edge_idle: bool, task_class: TaskClass) -> TaskClass:
    """Promote non-real-time work to soft when the edge is idle; no-op otherwise."""
    if edge_idle and task_class is TaskClass.NON_REAL_TIME:
        return TaskClass.SOFT
    return task_class


class RtEstimator:
    """Sliding-window mean of edge-path response times (integer nanoseconds).

    The threshold comparison is exact integer arithmetic (sum <= threshold * n),
    so scaling samples and threshold by a common factor can never flip it.
    """

    __slots__ = ("window",)

    def __init__(self, window_size: int = 10) -> None:
        if window_size < 1:
            raise ValueError(f"window size must be >= 1, got {window_size}")
        self.window: deque[int] = deque(maxlen=window_size)

    def add(self, response_time_ns: int) -> None:
        self.window.append(response_time_ns)

    def __len__(self) -> int:
        return len(self.window)

    @property
    def current_mean_ns(self) -> float:
        if not self.window:
            return 0.0
        return sum(self.window) / len(self.window)

    def within_threshold(self, threshold_ns: int) -> bool:
        """True when empty (cold start) or mean <= threshold, computed exactly."""
        if not self.window:
            return True
        return sum(self.window) <= threshold_ns * len(self.window)


@dataclass(frozen=True, slots=True)
class OffloadDecision:
    soft_destination: Destination
    route: tuple[NodeId, ...]
    decided_at_ns: int
    sequence_no: int


def decide(
    estimator: RtEstimator,
    threshold_ns: int,
    *,
    sequence_no: int,
    decided_at_ns: int,
    routes: dict[Destination, tuple[NodeId, ...]],
) -> OffloadDecision:
    """Pick the soft-task destination from the current response-time estimate."""
    if threshold_ns <= 0:
        raise ValueError(f"threshold must be positive, got {threshold_ns}")
    destination = (
        Destination.EDGE if estimator.within_threshold(threshold_ns) else Destination.CLOUD
    )
    return OffloadDecision(destination, routes[destination], decided_at_ns, sequence_no)


def route_for(task_class: TaskClass, active_destination: Destination) -> Destination:
    """Firm is pinned to the edge, non-real-time to the cloud; soft follows the decision."""
    if task_class is TaskClass.FIRM:
        return Destination.EDGE
    if task_class is TaskClass.NON_REAL_TIME:
        return Destination.CLOUD
    return active_destination


# Notification body: 1 byte destination (0=edge, 1=cloud) + 8 bytes sequence_no.
# The wire header carries no payload octets, so this blob rides alongside the
# packet and is what terminals actually decode.
NOTIFY_BODY = struct.Struct(">BQ")


def encode_decision(destination: Destination, sequence_no: int) -> bytes:
    return NOTIFY_BODY.pack(int(destination), sequence_no)


def decode_decision(body: bytes) -> tuple[Destination, int]:
    if len(body) != NOTIFY_BODY.size:
        raise ValueError(f"notification body must be {NOTIFY_BODY.size} bytes, got {len(body)}")
    dest_byte, sequence_no = NOTIFY_BODY.unpack(body)
    return Destination(dest_byte), sequence_no


def make_notification(decision: OffloadDecision, payload_bits: int) -> tuple[WirePacket, bytes]:
    """Build the periodic notify packet and its decision body."""
    packet = WirePacket(PacketKind.NOTIFY, None, 0, payload_bits, ())
    return packet, encode_decision(decision.soft_destination, decision.sequence_no)


@dataclass(frozen=True, slots=True)
class TerminalPolicyState:
    active_decision: OffloadDecision
    last_notify_at_ns: int = 0

    @property
    def active_destination(self) -> Destination:
        return self.active_decision.soft_destination


def initial_policy_state(edge_route: tuple[NodeId, ...]) -> TerminalPolicyState:
    # cold start: edge, sequence 0, so any real decision (seq >= 1) supersedes it
    return TerminalPolicyState(OffloadDecision(Destination.EDGE, edge_route, 0, 0))


def apply_notification(
    state: TerminalPolicyState,
    packet: WirePacket,
    body: bytes,
    now_ns: int,
    routes: dict[Destination, tuple[NodeId, ...]],
) -> tuple[TerminalPolicyState, bool]:
    """Adopt the notified decision iff its sequence number is newer."""
    if packet.kind is not PacketKind.NOTIFY:
        raise ValueError(f"expected a notify packet, got {packet.kind.label}")
    destination, sequence_no = decode_decision(body)
    if sequence_no <= state.active_decision.sequence_no:
        return replace(state, last_notify_at_ns=now_ns), False
    decision = OffloadDecision(destination, routes[destination], now_ns, sequence_no)
    return TerminalPolicyState(decision, now_ns), True
