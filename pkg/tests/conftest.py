import io
import socket
import struct

import numpy as np
import pytest

from ransomflow.features import Dataset, FULL_FEATURES

_outcomes = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        prev = _outcomes.get(number, (title, True))
        _outcomes[number] = (title, prev[1] and rep.passed)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_outcomes):
        title, ok = _outcomes[number]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {number:>2}: {title}")


def reference_conversations(packets):
    """Brute-force aggregation: one pass, grouping by an unordered endpoint pair."""
    groups = {}
    order = []
    for p in packets:
        key = (p.protocol, frozenset([(p.src_ip, p.src_port), (p.dst_ip, p.dst_port)]))
        if key not in groups:
            groups[key] = {"a": (p.src_ip, p.src_port), "b": (p.dst_ip, p.dst_port), "pkts": []}
            order.append(key)
        groups[key]["pkts"].append(p)
    if not packets:
        return []
    start = min(p.timestamp for p in packets)
    rows = []
    for key in order:
        g = groups[key]
        ab = [p for p in g["pkts"] if (p.src_ip, p.src_port) == g["a"]]
        ba = [p for p in g["pkts"] if (p.src_ip, p.src_port) != g["a"]]
        first = min(p.timestamp for p in g["pkts"])
        last = max(p.timestamp for p in g["pkts"])
        rows.append((key[0], g["a"][0], g["a"][1], g["b"][0], g["b"][1],
                     len(g["pkts"]), sum(p.wire_bytes for p in g["pkts"]),
                     len(ab), sum(p.wire_bytes for p in ab),
                     len(ba), sum(p.wire_bytes for p in ba),
                     first - start, last - first))
    return rows


def ethernet_ipv4(proto, src, sport, dst, dport, payload=0, frag=0x4000, ethertype=0x0800,
                  version=4, vlan=False):
    eth = b"\x00" * 12
    if vlan:
        eth += struct.pack(">HH", 0x8100, 7)
    eth += struct.pack(">H", ethertype)
    if proto == 6:
        l4 = struct.pack(">HHIIBBHHH", sport, dport, 0, 0, 0x50, 0x02, 1024, 0, 0)
    else:
        l4 = struct.pack(">HHHH", sport, dport, 8 + payload, 0)
    ip = struct.pack(">BBHHHBBH4s4s", (version << 4) | 5, 0, 20 + len(l4) + payload, 0, frag, 64,
                     proto, 0, socket.inet_aton(src), socket.inet_aton(dst))
    return eth + ip + l4 + b"\x00" * payload


def pcap_bytes(frames, magic=b"\xd4\xc3\xb2\xa1", linktype=1):
    """``frames`` are ``(ts_sec, ts_frac, frame)`` or ``(ts_sec, ts_frac, frame, orig_len)``."""
    big = magic in (b"\xa1\xb2\xc3\xd4", b"\xa1\xb2\x3c\x4d")
    order = ">" if big else "<"
    out = io.BytesIO()
    out.write(magic + struct.pack(order + "HHiIII", 2, 4, 0, 0, 65535, linktype))
    for item in frames:
        sec, frac, frame = item[:3]
        orig = item[3] if len(item) > 3 else len(frame)
        out.write(struct.pack(order + "IIII", sec, frac, len(frame), orig))
        out.write(frame)
    return out.getvalue()


@pytest.fixture
def toy_dataset():
    rng = np.random.default_rng(11)
    n = 120
    X = rng.integers(0, 1000, size=(n, len(FULL_FEATURES))).astype(float)
    y = (X[:, 2] > 500).astype(int)
    groups = [f"cap{i // 6:02d}" for i in range(n)]
    # groups must be single-class for splitting; relabel by group majority
    for g in set(groups):
        idx = [i for i, gg in enumerate(groups) if gg == g]
        y[idx] = int(round(y[idx].mean()))
    return Dataset(FULL_FEATURES, X, y, groups)
