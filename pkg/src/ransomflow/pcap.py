"""Streaming reader for classic libpcap capture files.

Only Ethernet captures carrying IPv4 TCP/UDP are decoded; every other
record is counted under a skip reason and passed over. Corrupt records
never abort the stream.
"""
from __future__ import annotations

import os
import socket
import struct
from collections import Counter, deque
from typing import BinaryIO, Iterator, NamedTuple

from . import _kernels
from .errors import Truncated, UnsupportedFormat

GLOBAL_HEADER_LEN = 24
RECORD_HEADER_LEN = 16
LINKTYPE_ETHERNET = 1
CHUNK_SIZE = 1 << 20

_MAGICS = {
    b"\xd4\xc3\xb2\xa1": ("little", "microsecond"),
    b"\xa1\xb2\xc3\xd4": ("big", "microsecond"),
    b"\x4d\x3c\xb2\xa1": ("little", "nanosecond"),
    b"\xa1\xb2\x3c\x4d": ("big", "nanosecond"),
}
PCAPNG_MAGIC = b"\x0a\x0d\x0d\x0a"


class PacketRecord(NamedTuple):
    timestamp: float
    protocol: int
    src_ip: str
    src_port: int
    dst_ip: str
    dst_port: int
    wire_bytes: int


class Skipped(NamedTuple):
    reason: str


class End(NamedTuple):
    truncated: bool = False


class CaptureReader:
    """Sequential, single-consumer reader over one capture file.

    Use :func:`open_capture` to construct. Iterating yields only the
    decoded :class:`PacketRecord` objects; :meth:`next_packet` exposes
    skips and the end-of-stream marker as well.
    """

    def __init__(self, stream: BinaryIO, source: str, *, close: bool = False):
        self.source = source
        self._stream = stream
        self._close = close
        header = stream.read(GLOBAL_HEADER_LEN)
        if header[:4] == PCAPNG_MAGIC:
            raise UnsupportedFormat(f"{source}: pcapng not supported, convert to classic pcap")
        if len(header) < GLOBAL_HEADER_LEN:
            raise Truncated(f"{source}: file shorter than the {GLOBAL_HEADER_LEN}-byte pcap header")
        try:
            self.byte_order, self.resolution = _MAGICS[header[:4]]
        except KeyError:
            raise UnsupportedFormat(f"{source}: unrecognized magic {header[:4].hex()}") from None
        fmt = "<" if self.byte_order == "little" else ">"
        self.version = struct.unpack_from(fmt + "HH", header, 4)
        self.snaplen, self.link_type = struct.unpack_from(fmt + "II", header, 16)
        if self.link_type != LINKTYPE_ETHERNET:
            raise UnsupportedFormat(f"{source}: link type {self.link_type} not supported (Ethernet only)")
        self.skip_counts: Counter[str] = Counter()
        self.records_seen = 0
        self.truncated = False
        self._buf = b""
        self._pos = 0
        self._pending: deque = deque()
        self._eof = False
        self._done = False

    def _refill(self) -> None:
        while not self._pending and not self._eof:
            chunk = self._stream.read(CHUNK_SIZE)
            if chunk:
                self._buf = self._buf[self._pos:] + chunk
                self._pos = 0
            else:
                self._eof = True
            events, self._pos, truncated = _kernels.scan_records(
                self._buf, self._pos, self.byte_order == "big",
                self.resolution == "nanosecond", self._eof)
            self._pending.extend(events)
            if truncated:
                self.truncated = True

    def next_packet(self) -> PacketRecord | Skipped | End:
        if not self._pending and not self._done:
            self._refill()
        if not self._pending:
            if not self._done:
                self._done = True
                if self._close:
                    self._stream.close()
            return End(self.truncated)
        event = self._pending.popleft()
        if type(event) is str:
            self.records_seen += 1
            self.skip_counts[event] += 1
            return Skipped(event)
        self.records_seen += 1
        ts, proto, src, sport, dst, dport, wire = event
        return PacketRecord(ts, proto, socket.inet_ntoa(src), sport,
                            socket.inet_ntoa(dst), dport, wire)

    def __iter__(self) -> Iterator[PacketRecord]:
        while True:
            item = self.next_packet()
            if type(item) is PacketRecord:
                yield item
            elif type(item) is End:
                return

    def close(self) -> None:
        if self._close and not self._stream.closed:
            self._stream.close()

    def __enter__(self) -> CaptureReader:
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def open_capture(path: str | os.PathLike | BinaryIO) -> CaptureReader:
    """Open a classic pcap file (path or binary file object) for decoding."""
    if hasattr(path, "read"):
        return CaptureReader(path, getattr(path, "name", "<stream>"))
    stream = open(path, "rb")
    try:
        return CaptureReader(stream, os.fspath(path), close=True)
    except Exception:
        stream.close()
        raise


def read_packets(path) -> tuple[list[PacketRecord], Counter]:
    """Decode a whole capture; returns the packets and the skip counters."""
    with open_capture(path) as reader:
        packets = list(reader)
        return packets, reader.skip_counts
