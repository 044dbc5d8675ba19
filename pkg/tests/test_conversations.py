import random

import pytest
from hypothesis import given, settings, strategies as st

from ransomflow.conversations import (Conversation, ConversationKey, ConversationTable, accumulate,
                                      aggregate, extract_conversations, finalize)
from ransomflow.pcap import PacketRecord

from conftest import reference_conversations


def pkt(ts, src, sport, dst, dport, wire=90, proto=17):
    return PacketRecord(ts, proto, src, sport, dst, dport, wire)


def test_key_is_direction_insensitive():
    a, b = ("10.0.2.15", 123), ("9.9.9.9", 123)
    assert ConversationKey.of(17, a, b) == ConversationKey.of(17, b, a)
    # numeric, not lexicographic, ordering of addresses
    assert ConversationKey.of(6, ("10.0.0.1", 1), ("9.0.0.1", 1)).low == ("9.0.0.1", 1)


def test_single_udp_packet():
    table = accumulate(ConversationTable(), pkt(0.0, "10.0.2.15", 123, "9.9.9.9", 123))
    (conv,) = finalize(table, 0.0)
    assert (conv.packets_ab, conv.bytes_ab, conv.packets_ba) == (1, 90, 0)
    assert conv.duration == 0


def test_reply_joins_same_conversation():
    table = ConversationTable()
    accumulate(table, pkt(0.0, "10.0.2.15", 123, "9.9.9.9", 123))
    accumulate(table, pkt(0.5, "9.9.9.9", 123, "10.0.2.15", 123))
    (conv,) = table.finalize()
    assert (conv.address_a, conv.packets_ab, conv.packets_ba) == ("10.0.2.15", 1, 1)
    assert conv.duration == 0.5


def test_different_source_port_is_new_conversation():
    table = ConversationTable()
    accumulate(table, pkt(0.0, "10.0.2.15", 123, "9.9.9.9", 123))
    accumulate(table, pkt(0.1, "10.0.2.15", 50000, "9.9.9.9", 123))
    assert len(table.finalize()) == 2


def test_rel_start_from_capture_start():
    table = ConversationTable()
    accumulate(table, pkt(1000.0, "10.0.2.15", 1, "9.9.9.9", 2))
    accumulate(table, pkt(1073.18, "10.0.2.15", 3, "9.9.9.9", 4))
    convs = table.finalize(1000.0)
    assert convs[1].rel_start == pytest.approx(73.18, abs=1e-9)
    assert convs[1].duration == 0


def test_totals_are_directional_sums():
    packets = [pkt(0.0, "192.168.56.17", 58762, "2.18.213.64", 80, 100, 6)]
    packets += [pkt(0.01 * i, "192.168.56.17", 58762, "2.18.213.64", 80, 100, 6) for i in range(1, 64)]
    packets += [pkt(0.02 * i, "2.18.213.64", 80, "192.168.56.17", 58762, 960, 6) for i in range(188)]
    (conv,) = aggregate(packets)
    (ref,) = reference_conversations(packets)
    assert (conv.packets_ab, conv.packets_ba) == (64, 188)
    assert conv.packets == ref[5] == 252
    assert conv.bytes == ref[6]


def test_empty_table():
    assert ConversationTable().finalize() == []


def test_finalize_idempotent_and_ordered():
    rng = random.Random(4)
    packets = [pkt(rng.random() * 10, "10.0.2.15", rng.randint(1, 5), "9.9.9.9", 80, rng.randint(60, 1500), 6)
               for _ in range(100)]
    table = ConversationTable().update(packets)
    first = table.finalize()
    assert first == table.finalize()
    keys = [(c.rel_start, c.key.sort_key()) for c in first]
    assert keys == sorted(keys)


endpoints = st.tuples(st.sampled_from(["10.0.2.15", "9.9.9.9", "10.0.2.3", "192.168.56.15"]),
                      st.sampled_from([53, 80, 123, 443, 50000]))
packets_st = st.lists(st.tuples(st.floats(0, 1000, allow_nan=False), st.sampled_from([6, 17]),
                                endpoints, endpoints, st.integers(42, 1514)), max_size=60)


@settings(max_examples=300, deadline=None)
@given(packets_st)
def test_matches_bruteforce_reference(raw):
    packets = [PacketRecord(ts, proto, a[0], a[1], b[0], b[1], w) for ts, proto, a, b, w in raw if a != b]
    got = sorted(c.features() for c in aggregate(packets))
    assert got == sorted(reference_conversations(packets))
    convs = aggregate(packets)
    assert sum(c.packets for c in convs) == len(packets)
    assert sum(c.bytes for c in convs) == sum(p.wire_bytes for p in packets)
    assert all(c.packets >= 1 and c.duration >= 0 and c.rel_start >= 0 for c in convs)


@settings(max_examples=100, deadline=None)
@given(packets_st, st.randoms(use_true_random=False))
def test_order_permutation_invariance(raw, rnd):
    packets = [PacketRecord(ts, proto, a[0], a[1], b[0], b[1], w) for ts, proto, a, b, w in raw if a != b]
    base = aggregate(packets)
    first_of = {}
    for i, p in enumerate(packets):
        first_of.setdefault(ConversationKey.of(p.protocol, (p.src_ip, p.src_port), (p.dst_ip, p.dst_port)), i)
    heads = [packets[i] for i in sorted(first_of.values())]
    rest = [p for i, p in enumerate(packets) if i not in set(first_of.values())]
    rnd.shuffle(rest)
    assert aggregate(heads + rest) == base


def test_extract_from_file_uses_stem_as_capture(tmp_path):
    from conftest import ethernet_ipv4, pcap_bytes

    path = tmp_path / "abc123.pcap"
    path.write_bytes(pcap_bytes([(5, 0, ethernet_ipv4(6, "10.0.2.15", 1045, "23.1.2.3", 80))]))
    (conv,) = extract_conversations(path)
    assert conv.source_capture == "abc123"
    assert isinstance(conv, Conversation) and len(conv.features()) == 13
