import io

import pytest
from hypothesis import given, settings, strategies as st

from ransomflow.errors import Truncated, UnsupportedFormat
from ransomflow.pcap import End, PacketRecord, Skipped, open_capture, read_packets

from conftest import ethernet_ipv4, pcap_bytes


def _reader(data):
    return open_capture(io.BytesIO(data))


def test_little_endian_microsecond_magic():
    r = _reader(pcap_bytes([]))
    assert (r.byte_order, r.resolution, r.link_type) == ("little", "microsecond", 1)


@pytest.mark.parametrize("magic,order,res", [
    (b"\xa1\xb2\xc3\xd4", "big", "microsecond"),
    (b"\x4d\x3c\xb2\xa1", "little", "nanosecond"),
    (b"\xa1\xb2\x3c\x4d", "big", "nanosecond"),
])
def test_other_magics(magic, order, res):
    frame = ethernet_ipv4(6, "192.168.56.15", 59612, "91.121.216.96", 6892)
    r = _reader(pcap_bytes([(10, 500, frame)], magic=magic))
    assert (r.byte_order, r.resolution) == (order, res)
    pkt = r.next_packet()
    scale = 1e9 if res == "nanosecond" else 1e6
    assert pkt.timestamp == 10 + 500 / scale


def test_pcapng_rejected():
    with pytest.raises(UnsupportedFormat, match="pcapng not supported"):
        _reader(b"\x0a\x0d\x0d\x0a" + b"\x00" * 40)


def test_zero_byte_file_is_truncated(tmp_path):
    path = tmp_path / "empty.pcap"
    path.write_bytes(b"")
    with pytest.raises(Truncated):
        open_capture(path)


def test_unknown_magic_and_linktype():
    with pytest.raises(UnsupportedFormat):
        _reader(b"\x00" * 24)
    with pytest.raises(UnsupportedFormat, match="link type"):
        _reader(pcap_bytes([], linktype=101))


def test_tcp_record_fields():
    frame = ethernet_ipv4(6, "192.168.56.15", 59612, "91.121.216.96", 6892, payload=10)
    r = _reader(pcap_bytes([(73, 180000, frame, 200)]))
    pkt = r.next_packet()
    assert pkt == PacketRecord(73.18, 6, "192.168.56.15", 59612, "91.121.216.96", 6892, 200)
    assert r.next_packet() == End(False)


def test_wire_bytes_is_original_length():
    frame = ethernet_ipv4(17, "10.0.2.15", 123, "8.8.8.8", 123, payload=48)
    pkt = _reader(pcap_bytes([(1, 0, frame, 1514)])).next_packet()
    assert pkt.wire_bytes == 1514


def test_skips():
    frames = [
        (1, 0, ethernet_ipv4(6, "1.1.1.1", 1, "2.2.2.2", 2, ethertype=0x0806)),
        (1, 1, ethernet_ipv4(6, "1.1.1.1", 1, "2.2.2.2", 2, frag=0x0010)),
        (1, 2, ethernet_ipv4(1, "1.1.1.1", 1, "2.2.2.2", 2)),
        (1, 3, ethernet_ipv4(6, "1.1.1.1", 1, "2.2.2.2", 2, version=6)),
        (1, 4, b"\x00" * 10),
        (1, 5, ethernet_ipv4(6, "1.1.1.1", 1, "2.2.2.2", 2, vlan=True)),
    ]
    r = _reader(pcap_bytes(frames))
    got = [r.next_packet() for _ in range(7)]
    assert got[:5] == [Skipped("non-ip"), Skipped("fragment"), Skipped("non-tcp-udp"),
                       Skipped("ip-version"), Skipped("bad-length")]
    assert isinstance(got[5], PacketRecord) and got[5].src_port == 1
    assert got[6] == End(False)
    assert r.skip_counts == {"non-ip": 1, "fragment": 1, "non-tcp-udp": 1,
                             "ip-version": 1, "bad-length": 1}


def test_truncated_tail_sets_flag():
    frame = ethernet_ipv4(6, "1.1.1.1", 1, "2.2.2.2", 2)
    data = pcap_bytes([(1, 0, frame), (2, 0, frame)])
    r = _reader(data[:-5])
    assert isinstance(r.next_packet(), PacketRecord)
    assert r.next_packet() == Skipped("truncated")
    assert r.next_packet() == End(True)
    r = _reader(data[:24 + 16 + len(frame) + 7])
    assert isinstance(r.next_packet(), PacketRecord)
    assert r.next_packet() == End(True)


def test_read_packets_from_path(tmp_path):
    frame = ethernet_ipv4(17, "10.0.2.15", 137, "10.0.2.255", 137)
    path = tmp_path / "x.pcap"
    path.write_bytes(pcap_bytes([(1, 0, frame)] * 3))
    packets, skips = read_packets(path)
    assert len(packets) == 3 and not skips


@settings(max_examples=200, deadline=None)
@given(st.binary(max_size=600), st.integers(0, 3))
def test_arbitrary_bytes_never_abort(body, which):
    magic = [b"\xd4\xc3\xb2\xa1", b"\xa1\xb2\xc3\xd4", b"\x4d\x3c\xb2\xa1", b"\xa1\xb2\x3c\x4d"][which]
    data = pcap_bytes([], magic=magic) + body
    decoded = []
    r = _reader(data)
    while True:
        item = r.next_packet()
        if isinstance(item, End):
            break
        decoded.append(item)
    assert r.records_seen == len(decoded)
    assert sum(isinstance(d, PacketRecord) for d in decoded) + sum(r.skip_counts.values()) == r.records_seen
    again = list(_reader(data))
    assert again == [d for d in decoded if isinstance(d, PacketRecord)]
    for p in again:
        assert p.protocol in (6, 17) and p.wire_bytes >= 42 and p.timestamp >= 0


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 2**32 - 1), st.integers(0, 999_999),
                          st.sampled_from([6, 17]), st.integers(0, 65535), st.integers(0, 65535),
                          st.integers(0, 300)), max_size=20))
def test_record_count_invariant(specs):
    frames = [(s, f, ethernet_ipv4(p, "10.0.0.1", a, "10.0.0.2", b, payload=n)) for s, f, p, a, b, n in specs]
    r = _reader(pcap_bytes(frames))
    out = list(r)
    assert len(out) == len(specs) == r.records_seen
    assert [(p.protocol, p.src_port, p.dst_port) for p in out] == [(p, a, b) for _, _, p, a, b, _ in specs]
