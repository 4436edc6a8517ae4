"""Bit-exact wire codec for packets carrying a per-hop timestamp stack.

Layout (big-endian, fixed):

    offset  size  field
    0       1     kind        0=taskup 1=resultdown 2=sync 3=notify
    1       1     task_class  0=firm 1=soft 2=nonrt 255=absent
    2       8     task_id     u64
    10      4     payload_bits u32 (application payload only)
    14      2     flags       low nibble of byte 15 = stack entry count,
                              all other bits reserved zero
    16      10*n  stack entries: switch_id u16, timestamp_ns u64

Encoding is canonical: one byte sequence per valid packet, and `decode`
rejects every buffer outside `encode`'s image.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from typing import NamedTuple

from .tasks import MAX_U16, MAX_U32, MAX_U64, NodeId, PacketKind, TaskClass

HEADER = struct.Struct(">BBQIH")
ENTRY = struct.Struct(">HQ")
HEADER_LEN = HEADER.size
ENTRY_LEN = ENTRY.size
MAX_STACK = 15

_CLASS_ABSENT = 0xFF
_VALID_CLASS_BYTES = {0, 1, 2, _CLASS_ABSENT}


class CodecError(ValueError):
    """Raised for any malformed packet or buffer."""


class IntEntry(NamedTuple):
    switch_id: int
    timestamp_ns: int


@dataclass(frozen=True, slots=True)
class WirePacket:
    kind: PacketKind
    task_class: TaskClass | None
    task_id: int
    payload_bits: int
    int_stack: tuple[IntEntry, ...] = ()

    def validate(self) -> None:
        if self.kind in (PacketKind.TASK_UP, PacketKind.RESULT_DOWN):
            if self.task_class is None:
                raise CodecError(f"{self.kind.label} packet requires a task class")
            if not 1 <= self.task_id <= MAX_U64:
                raise CodecError(f"{self.kind.label} packet requires task_id > 0")
        else:
            if self.task_class is not None:
                raise CodecError(f"{self.kind.label} packet must not carry a task class")
            if self.task_id != 0:
                raise CodecError(f"{self.kind.label} packet must have task_id 0")
        if not 0 <= self.payload_bits <= MAX_U32:
            raise CodecError(f"payload_bits out of range: {self.payload_bits}")
        if len(self.int_stack) > MAX_STACK:
            raise CodecError(f"timestamp stack too deep: {len(self.int_stack)}")
        for entry in self.int_stack:
            if not 0 <= entry.switch_id <= MAX_U16:
                raise CodecError(f"switch_id out of range: {entry.switch_id}")
            if not 0 <= entry.timestamp_ns <= MAX_U64:
                raise CodecError(f"timestamp out of range: {entry.timestamp_ns}")


@dataclass(frozen=True, slots=True)
class TelemetryReport:
    """Copy of a packet taken at a report-point switch before stripping."""

    reporting_switch: NodeId
    report_time_ns: int
    snapshot: WirePacket


def encode(packet: WirePacket) -> bytes:
    """Serialize a valid packet to its canonical byte layout."""
    packet.validate()
    class_byte = _CLASS_ABSENT if packet.task_class is None else int(packet.task_class)
    head = HEADER.pack(
        int(packet.kind),
        class_byte,
        packet.task_id,
        packet.payload_bits,
        len(packet.int_stack),
    )
    if not packet.int_stack:
        return head
    return head + b"".join(ENTRY.pack(e.switch_id, e.timestamp_ns) for e in packet.int_stack)


def decode(buf: bytes) -> WirePacket:
    """Parse a buffer produced by `encode`; reject everything else."""
    if len(buf) < HEADER_LEN:
        raise CodecError(f"truncated buffer: {len(buf)} bytes, header needs {HEADER_LEN}")
    kind_byte, class_byte, task_id, payload_bits, flags = HEADER.unpack_from(buf)
    try:
        kind = PacketKind(kind_byte)
    except ValueError:
        raise CodecError(f"unknown packet kind code {kind_byte}") from None
    if class_byte not in _VALID_CLASS_BYTES:
        raise CodecError(f"unknown task class code {class_byte}")
    if flags & 0xFFF0:
        raise CodecError(f"reserved flag bits set: {flags:#06x}")
    count = flags & 0x0F
    expected = HEADER_LEN + count * ENTRY_LEN
    if len(buf) < expected:
        raise CodecError(f"truncated buffer: {len(buf)} bytes, stack of {count} needs {expected}")
    if len(buf) > expected:
        raise CodecError(f"trailing bytes: {len(buf) - expected} past end of packet")
    entries = tuple(
        IntEntry(*ENTRY.unpack_from(buf, HEADER_LEN + i * ENTRY_LEN)) for i in range(count)
    )
    task_class = None if class_byte == _CLASS_ABSENT else TaskClass(class_byte)
    packet = WirePacket(kind, task_class, task_id, payload_bits, entries)
    packet.validate()
    return packet


def push_timestamp(packet: WirePacket, switch_id: int, now_ns: int) -> WirePacket:
    """Append one (switch, time) entry; all other fields unchanged."""
    if len(packet.int_stack) >= MAX_STACK:
        raise CodecError("timestamp stack full")
    return replace(packet, int_stack=packet.int_stack + (IntEntry(switch_id, now_ns),))


def strip_and_copy(
    packet: WirePacket, reporting_switch: NodeId, now_ns: int
) -> tuple[WirePacket, TelemetryReport]:
    """Snapshot the packet for telemetry and remove its timestamp stack."""
    report = TelemetryReport(reporting_switch, now_ns, packet)
    clean = replace(packet, int_stack=()) if packet.int_stack else packet
    return clean, report
