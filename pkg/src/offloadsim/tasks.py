"""Shared vocabulary: task classes, node identities, destinations, packet kinds.

All simulation times are integer nanoseconds counted from epoch 0; user-facing
output converts to milliseconds with three decimal places.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

NS_PER_US = 1_000
NS_PER_MS = 1_000_000
NS_PER_S = 1_000_000_000

MAX_U16 = 2**16 - 1
MAX_U32 = 2**32 - 1
MAX_U64 = 2**64 - 1


def ns_from_ms(ms: float) -> int:
    return int(round(ms * NS_PER_MS))


def ns_from_s(s: float) -> int:
    return int(round(s * NS_PER_S))


def ms_from_ns(ns: int) -> float:
    """Milliseconds as a float rounded to 3 decimals (microsecond precision)."""
    return round(ns / NS_PER_MS, 3)


def fmt_ms(ns: int) -> str:
    """Fixed three-decimal millisecond string for CSV output."""
    return f"{ns / NS_PER_MS:.3f}"


class TaskClass(enum.IntEnum):
    FIRM = 0
    SOFT = 1
    NON_REAL_TIME = 2

    @property
    def label(self) -> str:
        return _CLASS_LABELS[self]


_CLASS_LABELS = {
    TaskClass.FIRM: "firm",
    TaskClass.SOFT: "soft",
    TaskClass.NON_REAL_TIME: "nonrt",
}


class Destination(enum.IntEnum):
    EDGE = 0
    CLOUD = 1

    @property
    def label(self) -> str:
        return "edge" if self is Destination.EDGE else "cloud"


class PacketKind(enum.IntEnum):
    TASK_UP = 0
    RESULT_DOWN = 1
    SYNC = 2
    NOTIFY = 3

    @property
    def label(self) -> str:
        return _KIND_LABELS[self]


_KIND_LABELS = {
    PacketKind.TASK_UP: "taskup",
    PacketKind.RESULT_DOWN: "resultdown",
    PacketKind.SYNC: "sync",
    PacketKind.NOTIFY: "notify",
}


class NodeKind(enum.IntEnum):
    TERMINAL = 0
    SWITCH = 1
    EDGE_SERVER = 2
    CLOUD_SERVER = 3
    TELEMETRY_SERVER = 4


_NODE_LABELS = {
    NodeKind.TERMINAL: "terminal",
    NodeKind.SWITCH: "switch",
    NodeKind.EDGE_SERVER: "edge",
    NodeKind.CLOUD_SERVER: "cloud",
    NodeKind.TELEMETRY_SERVER: "telemetry",
}


class NodeId(NamedTuple):
    """(kind, index) pair; unique within a topology."""

    kind: NodeKind
    index: int

    @property
    def label(self) -> str:
        return f"{_NODE_LABELS[self.kind]}-{self.index}"

    @property
    def order_key(self) -> int:
        # single int so event tie-breaking stays a cheap tuple compare
        return (int(self.kind) << 16) | self.index


@dataclass(frozen=True, slots=True)
class Task:
    """A unit of offloadable work."""

    id: int
    task_class: TaskClass
    size_bits: int
    created_at_ns: int
    source: NodeId

    def __post_init__(self) -> None:
        if not 1 <= self.id <= MAX_U64:
            raise ValueError(f"task id out of range: {self.id}")
        if self.size_bits <= 0:
            raise ValueError(f"size_bits must be positive, got {self.size_bits}")
        if self.created_at_ns < 0:
            raise ValueError(f"created_at_ns must be >= 0, got {self.created_at_ns}")


class TaskIdGenerator:
    """Monotone counter issuing run-unique 64-bit task ids, starting at 1."""

    __slots__ = ("_counter",)

    def __init__(self) -> None:
        self._counter = 0

    def next_id(self) -> int:
        if self._counter >= MAX_U64:
            raise OverflowError("task id counter exhausted")
        self._counter += 1
        return self._counter

    @property
    def issued(self) -> int:
        return self._counter
