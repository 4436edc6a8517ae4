"""Shared test utilities: random packet generation and trace parsing."""

from __future__ import annotations

import random

from offloadsim.tasks import MAX_U16, MAX_U32, MAX_U64, PacketKind, TaskClass
from offloadsim.wire import IntEntry, WirePacket


def random_stack(rng: random.Random, max_len: int = 15) -> tuple[IntEntry, ...]:
    length = rng.randint(0, max_len)
    entries = []
    ts = rng.randint(0, 2**40)
    for _ in range(length):
        ts += rng.randint(0, 10**9)
        entries.append(IntEntry(rng.randint(0, MAX_U16), ts))
    return tuple(entries)


def random_packet(rng: random.Random) -> WirePacket:
    kind = rng.choice(list(PacketKind))
    if kind in (PacketKind.TASK_UP, PacketKind.RESULT_DOWN):
        task_class = rng.choice(list(TaskClass))
        task_id = rng.randint(1, MAX_U64)
    else:
        task_class = None
        task_id = 0
    return WirePacket(
        kind=kind,
        task_class=task_class,
        task_id=task_id,
        payload_bits=rng.randint(0, MAX_U32),
        int_stack=random_stack(rng),
    )


def parse_detail(detail: str) -> dict[str, str]:
    out = {}
    for part in detail.split():
        key, _, value = part.partition("=")
        out[key] = value
    return out
