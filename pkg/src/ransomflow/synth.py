"""Deterministic synthetic captures with exact ground-truth conversation tables.

Each capture simulates one sandboxed sample talking from a local host to
remote endpoints. The generator records what it writes, so its returned
conversation list is the expected output of decode + aggregate.
"""
from __future__ import annotations

import csv
import hashlib
import ipaddress
import os
import socket
import struct
from dataclasses import dataclass, replace

import numpy as np

from .conversations import Conversation, ConversationKey
from .errors import IoError, RansomflowError

ETH_SRC = bytes.fromhex("080027000001")
ETH_DST = bytes.fromhex("525400123502")


@dataclass(frozen=True)
class ScenarioConfig:
    """Knobs for one simulated capture. Ranges are inclusive ``(low, high)``."""

    label: str = "Goodware"
    conversations: tuple[int, int] = (5, 20)
    packets: tuple[int, int] = (1, 40)
    payload: tuple[int, int] = (0, 1400)
    remote_ports: tuple[int, ...] = (80, 443)
    udp_ports: tuple[int, ...] = (123,)
    udp_fraction: float = 0.2
    local_ports: tuple[int, int] = (49152, 65535)
    reply_fraction: float = 0.5
    remote_initiated_fraction: float = 0.0
    gap_us: tuple[int, int] = (0, 2_000_000)
    start_spread_s: float = 300.0
    local_host: str = "10.0.2.15"
    remote_pool: tuple[str, ...] = ("23.0.0.0/8", "104.16.0.0/12", "172.217.0.0/16", "52.0.0.0/10")
    dns_lookups: tuple[int, int] = (0, 2)
    dns_server: str = "10.0.2.3"
    dhcp_probability: float = 0.0
    noise_frames: tuple[int, int] = (0, 0)
    vlan_probability: float = 0.0
    snaplen: int = 65535
    nanosecond: bool = False
    big_endian: bool = False
    seed: int = 0

    def __post_init__(self):
        for name in ("conversations", "packets", "payload", "local_ports", "gap_us",
                     "dns_lookups", "noise_frames"):
            lo, hi = getattr(self, name)
            if lo > hi or lo < 0:
                raise ValueError(f"{name} range must be non-empty and non-negative: {(lo, hi)}")
        if self.packets[0] < 1:
            raise ValueError("every conversation needs at least one packet")
        if self.payload[1] > 1460:
            raise ValueError("payload above 1460 bytes exceeds a standard frame")
        if not self.remote_ports or not self.remote_pool:
            raise ValueError("remote_ports and remote_pool must be non-empty")
        if self.udp_fraction > 0 and not self.udp_ports:
            raise ValueError("udp_fraction > 0 requires udp_ports")
        if self.snaplen < 64:
            raise ValueError("snaplen must cover the full header stack (>= 64)")
        if self.label not in ("Goodware", "Malware"):
            raise ValueError(f"label must be Goodware or Malware, got {self.label!r}")


def goodware_profile(seed: int = 0, **overrides) -> ScenarioConfig:
    """Web, NTP and NetBIOS-like traffic from ephemeral ports with bulky replies."""
    cfg = ScenarioConfig(label="Goodware", conversations=(8, 20), packets=(6, 40),
                         payload=(300, 1400), remote_ports=(80, 443), udp_ports=(123, 137),
                         udp_fraction=0.15, local_ports=(49152, 65535), reply_fraction=0.6,
                         dns_lookups=(1, 3), seed=seed)
    return replace(cfg, **overrides)


def malware_profile(seed: int = 0, **overrides) -> ScenarioConfig:
    """Short, small beacons from low local ports to unusual remote ports."""
    cfg = ScenarioConfig(label="Malware", conversations=(10, 25), packets=(1, 5),
                         payload=(0, 120), remote_ports=(4444, 6892, 8443, 9001),
                         udp_ports=(6892,), udp_fraction=0.3, local_ports=(1025, 5000),
                         reply_fraction=0.3, dns_lookups=(1, 3), dhcp_probability=0.5,
                         remote_pool=("91.121.0.0/16", "185.0.0.0/8", "5.0.0.0/8"), seed=seed)
    return replace(cfg, **overrides)


def overlapping_profiles(seed: int = 0) -> tuple[ScenarioConfig, ScenarioConfig]:
    """Goodware and malware configs whose traffic shapes largely coincide."""
    good = goodware_profile(seed, packets=(1, 20), payload=(0, 800), remote_ports=(80, 443, 8443))
    bad = replace(good, label="Malware", reply_fraction=0.5)
    return good, bad


class _Packet:
    __slots__ = ("us", "conv", "seq", "frame_args")

    def __init__(self, us, conv, seq, frame_args):
        self.us = us
        self.conv = conv
        self.seq = seq
        self.frame_args = frame_args


def _pick(rng, lo, hi) -> int:
    return int(rng.integers(lo, hi + 1))


def _random_address(rng, networks) -> str:
    net = networks[int(rng.integers(len(networks)))]
    offset = int(rng.integers(1, max(2, net.num_addresses - 1)))
    return str(net.network_address + offset)


def _ip_header(proto, src, dst, payload_len, flags_frag=0x4000):
    return struct.pack(">BBHHHBBH4s4s", 0x45, 0, 20 + payload_len, 0, flags_frag, 64, proto, 0,
                       socket.inet_aton(src), socket.inet_aton(dst))


def _frame(kind, proto, src, sport, dst, dport, payload, vlan):
    """Raw Ethernet frame for one generated packet."""
    eth = ETH_DST + ETH_SRC
    if vlan:
        eth += struct.pack(">HH", 0x8100, 100)
    if kind == "arp":
        return eth + struct.pack(">H", 0x0806) + b"\x00" * 28
    if kind == "ipv6":
        return eth + struct.pack(">H", 0x86DD) + b"\x00" * 40
    eth += struct.pack(">H", 0x0800)
    if kind == "icmp":
        return eth + _ip_header(1, src, dst, 8) + b"\x00" * 8
    if kind == "fragment":
        return eth + _ip_header(proto, src, dst, 24, flags_frag=0x0003) + b"\x00" * 24
    if proto == 6:
        l4 = struct.pack(">HHIIBBHHH", sport, dport, 0, 0, 0x50, 0x18, 8192, 0, 0)
    else:
        l4 = struct.pack(">HHHH", sport, dport, 8 + payload, 0)
    return eth + _ip_header(proto, src, dst, len(l4) + payload) + l4 + b"\x00" * payload


def generate_capture(config: ScenarioConfig, capture_id: str = "") -> tuple[bytes, list[Conversation], str]:
    """Build one capture; returns ``(pcap_bytes, ground_truth, label)``."""
    rng = np.random.default_rng(config.seed)
    networks = [ipaddress.IPv4Network(n) for n in config.remote_pool]
    base_sec = 1_480_000_000 + int(rng.integers(0, 50_000_000))
    spread_us = int(config.start_spread_s * 1_000_000)
    local = config.local_host
    used: set[ConversationKey] = set()
    plans = []  # (protocol, a, b, start_us)

    def add(protocol, a, b):
        key = ConversationKey.of(protocol, a, b)
        if key in used or a == b:
            return False
        used.add(key)
        plans.append((protocol, a, b, int(rng.integers(0, spread_us + 1))))
        return True

    n_conv = _pick(rng, *config.conversations)
    attempts = 0
    while len(plans) < n_conv:
        attempts += 1
        if attempts > 100 * n_conv + 100:
            raise ValueError("cannot draw enough distinct conversations from this config")
        udp = rng.random() < config.udp_fraction
        protocol = 17 if udp else 6
        port = int(rng.choice(config.udp_ports if udp else config.remote_ports))
        remote = (_random_address(rng, networks), port)
        ours = (local, _pick(rng, *config.local_ports))
        if rng.random() < config.remote_initiated_fraction:
            add(protocol, remote, ours)
        else:
            add(protocol, ours, remote)
    for _ in range(_pick(rng, *config.dns_lookups)):
        add(17, (local, _pick(rng, *config.local_ports)), (config.dns_server, 53))
    if rng.random() < config.dhcp_probability:
        add(17, ("0.0.0.0", 68), ("255.255.255.255", 67))

    packets: list[_Packet] = []
    truth_counts = []
    for ci, (protocol, a, b, start_us) in enumerate(plans):
        n = _pick(rng, *config.packets)
        gaps = rng.integers(config.gap_us[0], config.gap_us[1] + 1, size=n)
        gaps[0] = 0
        times = start_us + np.cumsum(gaps)
        replies = rng.random(n) < config.reply_fraction
        replies[0] = False
        sizes = rng.integers(config.payload[0], config.payload[1] + 1, size=n)
        vlan = rng.random(n) < config.vlan_probability
        stats = [0, 0, 0, 0]
        hdr = 14 + 20 + (20 if protocol == 6 else 8)
        for seq in range(n):
            src, dst = (b, a) if replies[seq] else (a, b)
            wire = hdr + 4 * bool(vlan[seq]) + int(sizes[seq])
            if replies[seq]:
                stats[2] += 1
                stats[3] += wire
            else:
                stats[0] += 1
                stats[1] += wire
            packets.append(_Packet(int(times[seq]), ci, seq,
                                   ("ip", protocol, src[0], src[1], dst[0], dst[1],
                                    int(sizes[seq]), bool(vlan[seq]))))
        truth_counts.append((stats, int(times[0]), int(times[-1])))

    n_noise = _pick(rng, *config.noise_frames)
    for i in range(n_noise):
        kind = ("arp", "ipv6", "icmp", "fragment")[int(rng.integers(4))]
        remote = _random_address(rng, networks)
        packets.append(_Packet(int(rng.integers(0, spread_us + 1)), len(plans) + i, 0,
                               (kind, 17, local, 0, remote, 0, 0, False)))

    packets.sort(key=lambda p: (p.us, p.conv, p.seq))
    scale = 1_000_000_000 if config.nanosecond else 1_000_000
    per_us = 1000 if config.nanosecond else 1

    def as_float(us):
        sec, rem = divmod(us, 1_000_000)
        return (base_sec + sec) + (rem * per_us) / float(scale)

    order = ">" if config.big_endian else "<"
    magic = 0xA1B23C4D if config.nanosecond else 0xA1B2C3D4
    out = [struct.pack(order + "IHHiIII", magic, 2, 4, 0, 0, config.snaplen, 1)]
    rec = struct.Struct(order + "IIII")
    for p in packets:
        frame = _frame(*p.frame_args)
        sec, rem = divmod(p.us, 1_000_000)
        incl = min(len(frame), config.snaplen)
        out.append(rec.pack(base_sec + sec, rem * per_us, incl, len(frame)))
        out.append(frame[:incl])

    ip_times = [p.us for p in packets if p.frame_args[0] == "ip"]
    truth = []
    if ip_times:
        capture_start = as_float(min(ip_times))
        for (protocol, a, b, _), (stats, first_us, last_us) in zip(plans, truth_counts):
            first = as_float(first_us)
            truth.append(Conversation(
                protocol=protocol, address_a=a[0], port_a=a[1], address_b=b[0], port_b=b[1],
                packets=stats[0] + stats[2], bytes=stats[1] + stats[3],
                packets_ab=stats[0], bytes_ab=stats[1], packets_ba=stats[2], bytes_ba=stats[3],
                rel_start=first - capture_start, duration=as_float(last_us) - first,
                source_capture=capture_id))
        truth.sort(key=lambda c: (c.rel_start, c.key.sort_key()))
    return b"".join(out), truth, config.label


def sample_hash(seed: int, label: str, index: int) -> str:
    return hashlib.sha256(f"{seed}:{label}:{index}".encode()).hexdigest()


def capture_seed(seed: int, class_index: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, class_index, index]).generate_state(1)[0])


def generate_corpus(goodware_cfg: ScenarioConfig, malware_cfg: ScenarioConfig,
                    captures_per_class: int | tuple[int, int], seed: int,
                    out_dir) -> tuple[list[str], str]:
    """Write one pcap per simulated sample plus ``manifest.csv`` (``file,label``).

    ``captures_per_class`` is a count for both classes or a
    ``(goodware, malware)`` pair. Files are named by a synthetic sample
    hash; per-capture seeds derive from ``seed``. Returns the capture
    paths (sorted) and the manifest path.
    """
    if isinstance(captures_per_class, int):
        counts = (captures_per_class, captures_per_class)
    else:
        counts = tuple(captures_per_class)
    if min(counts) < 1:
        raise ValueError("each class needs at least one capture")
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create {out_dir}: {exc.strerror}") from exc
    entries = []
    for class_index, (cfg, count) in enumerate(zip((goodware_cfg, malware_cfg), counts)):
        for i in range(count):
            name = sample_hash(seed, cfg.label, i) + ".pcap"
            data, _, label = generate_capture(replace(cfg, seed=capture_seed(seed, class_index, i)),
                                              name[:-5])
            path = os.path.join(out_dir, name)
            try:
                with open(path, "wb") as fh:
                    fh.write(data)
            except OSError as exc:
                raise IoError(f"cannot write {path}: {exc.strerror}") from exc
            entries.append((name, label))
    entries.sort()
    manifest = os.path.join(out_dir, "manifest.csv")
    with open(manifest, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["file", "label"])
        writer.writerows(entries)
    return [os.path.join(out_dir, name) for name, _ in entries], manifest


def read_manifest(path) -> dict[str, str]:
    """``file -> label`` from a ``file,label`` CSV manifest."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"file", "label"} <= set(reader.fieldnames):
            raise RansomflowError(f"{path}: manifest needs a 'file,label' header")
        return {row["file"]: row["label"] for row in reader}
