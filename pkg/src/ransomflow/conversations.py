"""Bidirectional 5-tuple conversation aggregation.

A conversation groups every packet sharing a protocol and an unordered
endpoint pair. Endpoint A is whoever sent the first packet we saw.
"""
from __future__ import annotations

import os
import socket
from dataclasses import dataclass
from typing import Iterable, NamedTuple

from .pcap import PacketRecord, open_capture

Endpoint = tuple[str, int]


def _endpoint_order(ep: Endpoint) -> tuple[bytes, int]:
    return socket.inet_aton(ep[0]), ep[1]


class ConversationKey(NamedTuple):
    """Direction-insensitive key; endpoints are stored numerically sorted."""

    protocol: int
    low: Endpoint
    high: Endpoint

    @classmethod
    def of(cls, protocol: int, a: Endpoint, b: Endpoint) -> ConversationKey:
        if _endpoint_order(b) < _endpoint_order(a):
            a, b = b, a
        return cls(protocol, a, b)

    def sort_key(self):
        return self.protocol, _endpoint_order(self.low), _endpoint_order(self.high)


@dataclass(frozen=True)
class Conversation:
    protocol: int
    address_a: str
    port_a: int
    address_b: str
    port_b: int
    packets: int
    bytes: int
    packets_ab: int
    bytes_ab: int
    packets_ba: int
    bytes_ba: int
    rel_start: float
    duration: float
    source_capture: str = ""

    FEATURES = ("protocol", "address_a", "port_a", "address_b", "port_b", "packets",
                "bytes", "packets_ab", "bytes_ab", "packets_ba", "bytes_ba",
                "rel_start", "duration")

    def features(self) -> tuple:
        """The 13 per-conversation features, in column order."""
        return tuple(getattr(self, name) for name in self.FEATURES)

    @property
    def key(self) -> ConversationKey:
        return ConversationKey.of(self.protocol, (self.address_a, self.port_a),
                                  (self.address_b, self.port_b))


class _Flow:
    __slots__ = ("a", "b", "packets_ab", "bytes_ab", "packets_ba", "bytes_ba", "first", "last")

    def __init__(self, a: Endpoint, b: Endpoint, ts: float):
        self.a = a
        self.b = b
        self.packets_ab = self.bytes_ab = self.packets_ba = self.bytes_ba = 0
        self.first = self.last = ts


class ConversationTable:
    """Mutable per-capture accumulator. Not thread-safe; one per capture."""

    def __init__(self, source_capture: str = ""):
        self.source_capture = source_capture
        self.capture_start: float | None = None
        self.n_packets = 0
        self._flows: dict[ConversationKey, _Flow] = {}

    def __len__(self) -> int:
        return len(self._flows)

    def accumulate(self, packet: PacketRecord) -> ConversationTable:
        src = (packet.src_ip, packet.src_port)
        dst = (packet.dst_ip, packet.dst_port)
        key = ConversationKey.of(packet.protocol, src, dst)
        ts = packet.timestamp
        flow = self._flows.get(key)
        if flow is None:
            flow = self._flows[key] = _Flow(src, dst, ts)
        if src == flow.a:
            flow.packets_ab += 1
            flow.bytes_ab += packet.wire_bytes
        else:
            flow.packets_ba += 1
            flow.bytes_ba += packet.wire_bytes
        if ts < flow.first:
            flow.first = ts
        if ts > flow.last:
            flow.last = ts
        if self.capture_start is None or ts < self.capture_start:
            self.capture_start = ts
        self.n_packets += 1
        return self

    def update(self, packets: Iterable[PacketRecord]) -> ConversationTable:
        for packet in packets:
            self.accumulate(packet)
        return self

    def finalize(self, capture_start: float | None = None) -> list[Conversation]:
        """Emit conversations ordered by (rel_start, canonical key).

        ``capture_start`` defaults to the earliest accumulated timestamp.
        The table itself is left untouched, so repeated calls agree.
        """
        if not self._flows:
            return []
        start = self.capture_start if capture_start is None else capture_start
        rows = []
        for key, f in self._flows.items():
            conv = Conversation(
                protocol=key.protocol,
                address_a=f.a[0], port_a=f.a[1],
                address_b=f.b[0], port_b=f.b[1],
                packets=f.packets_ab + f.packets_ba,
                bytes=f.bytes_ab + f.bytes_ba,
                packets_ab=f.packets_ab, bytes_ab=f.bytes_ab,
                packets_ba=f.packets_ba, bytes_ba=f.bytes_ba,
                rel_start=f.first - start,
                duration=f.last - f.first,
                source_capture=self.source_capture,
            )
            rows.append((conv.rel_start, key.sort_key(), conv))
        rows.sort(key=lambda r: (r[0], r[1]))
        return [r[2] for r in rows]


def accumulate(table: ConversationTable, packet: PacketRecord) -> ConversationTable:
    return table.accumulate(packet)


def finalize(table: ConversationTable, capture_start: float | None = None) -> list[Conversation]:
    return table.finalize(capture_start)


def aggregate(packets: Iterable[PacketRecord], source_capture: str = "") -> list[Conversation]:
    return ConversationTable(source_capture).update(packets).finalize()


def extract_conversations(path, source_capture: str | None = None) -> list[Conversation]:
    """Decode a capture file and fold it into conversations.

    ``source_capture`` defaults to the file name without extension, which
    for sandbox captures is the sample hash.
    """
    if source_capture is None:
        source_capture = os.path.splitext(os.path.basename(os.fspath(path)))[0]
    with open_capture(path) as reader:
        return ConversationTable(source_capture).update(reader).finalize()
