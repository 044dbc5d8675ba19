"""Pure-Python implementations of the hot kernels.

Every function here mirrors the compiled version in ``_ckernels.pyx``
operation for operation, so both backends produce bit-identical output.
"""
import math
import struct

import numpy as np

ETH_HLEN = 14
VLAN_TPID = 0x8100
ETHERTYPE_IPV4 = 0x0800
TCP_HLEN = 20
UDP_HLEN = 8

_REC_LE = struct.Struct("<IIII")
_REC_BE = struct.Struct(">IIII")
_U16 = struct.Struct(">H")
_PORTS = struct.Struct(">HH")


def decode_frame(frame, orig_len):
    """Decode one Ethernet frame.

    Returns ``(protocol, src, sport, dst, dport)`` with 4-byte raw
    addresses, or a skip-reason string.
    """
    incl = len(frame)
    if incl < ETH_HLEN:
        return "bad-length"
    off = ETH_HLEN
    ethertype = _U16.unpack_from(frame, 12)[0]
    if ethertype == VLAN_TPID:
        if incl < ETH_HLEN + 4:
            return "bad-length"
        ethertype = _U16.unpack_from(frame, 16)[0]
        off = ETH_HLEN + 4
    if ethertype != ETHERTYPE_IPV4:
        return "non-ip"
    if incl < off + 20:
        return "bad-length"
    vihl = frame[off]
    if vihl >> 4 != 4:
        return "ip-version"
    ihl = (vihl & 0x0F) * 4
    if ihl < 20:
        return "bad-length"
    total_len = _U16.unpack_from(frame, off + 2)[0]
    if total_len < ihl:
        return "bad-length"
    if _U16.unpack_from(frame, off + 6)[0] & 0x1FFF:
        return "fragment"
    proto = frame[off + 9]
    if proto == 6:
        thdr = TCP_HLEN
    elif proto == 17:
        thdr = UDP_HLEN
    else:
        return "non-tcp-udp"
    end = off + ihl + thdr
    if incl < end or total_len < ihl + thdr or orig_len < end or orig_len < incl:
        return "bad-length"
    sport, dport = _PORTS.unpack_from(frame, off + ihl)
    return (proto, bytes(frame[off + 12:off + 16]), sport,
            bytes(frame[off + 16:off + 20]), dport)


def scan_records(buf, pos, big_endian, nano, final):
    """Decode every complete record in ``buf`` starting at ``pos``.

    Returns ``(events, pos, truncated)``. Each event is either a packet
    tuple ``(ts, proto, src, sport, dst, dport, wire_bytes)`` or a skip
    reason string. When ``final`` is false, a partial trailing record is
    left unconsumed for the next call.
    """
    rec = _REC_BE if big_endian else _REC_LE
    scale = 1000000000.0 if nano else 1000000.0
    n = len(buf)
    view = memoryview(buf)
    events = []
    truncated = False
    while True:
        remaining = n - pos
        if remaining < 16:
            if final and remaining > 0:
                truncated = True
                pos = n
            break
        ts_sec, ts_frac, incl, orig = rec.unpack_from(buf, pos)
        if remaining - 16 < incl:
            if final:
                events.append("truncated")
                truncated = True
                pos = n
            break
        start = pos + 16
        decoded = decode_frame(view[start:start + incl], orig)
        pos = start + incl
        if type(decoded) is str:
            events.append(decoded)
        else:
            ts = ts_sec + ts_frac / scale
            events.append((ts,) + decoded + (orig,))
    return events, pos, truncated


def best_threshold(values, labels, n_classes, min_leaf, nlogn):
    """Best binary cut of a sorted numeric column by information gain.

    ``values`` is sorted ascending and ``labels`` is aligned with it.
    ``nlogn[i]`` must hold ``i * log2(i)``. Returns ``(gain, index)``
    where the cut falls between ``values[index]`` and
    ``values[index + 1]``; ``index`` is -1 when no cut leaves at least
    ``min_leaf`` instances on each side.
    """
    n = values.shape[0]
    if n < 2:
        return -math.inf, -1
    totals = np.bincount(labels, minlength=n_classes)
    parent = nlogn[n]
    for c in range(n_classes):
        parent = parent - nlogn[totals[c]]
    onehot = np.zeros((n - 1, n_classes), dtype=np.int64)
    onehot[np.arange(n - 1), labels[:-1]] = 1
    left = np.cumsum(onehot, axis=0)
    nl = np.arange(1, n, dtype=np.int64)
    nr = n - nl
    lterm = nlogn[nl]
    rterm = nlogn[nr]
    for c in range(n_classes):
        lterm = lterm - nlogn[left[:, c]]
        rterm = rterm - nlogn[totals[c] - left[:, c]]
    gain = (parent - lterm - rterm) / n
    valid = (values[:-1] < values[1:]) & (nl >= min_leaf) & (nr >= min_leaf)
    if not valid.any():
        return -math.inf, -1
    gain = np.where(valid, gain, -np.inf)
    best = int(np.argmax(gain))
    return float(gain[best]), best


def _sigmoid(s):
    if s < -500.0:
        s = -500.0
    elif s > 500.0:
        s = 500.0
    return 1.0 / (1.0 + math.exp(-s))


def mlp_train(X, T, W1, W2, order, lr, momentum):
    """Per-instance SGD with momentum on a one-hidden-layer sigmoid net.

    Updates ``W1`` (hidden x inputs+1) and ``W2`` (outputs x hidden+1) in
    place; the last column of each holds the bias. ``order`` lists the
    instance indices to visit, epoch after epoch.
    """
    n_hidden, n_in1 = W1.shape
    n_in = n_in1 - 1
    n_out = W2.shape[0]
    w1 = W1.tolist()
    w2 = W2.tolist()
    d1 = [[0.0] * (n_in + 1) for _ in range(n_hidden)]
    d2 = [[0.0] * (n_hidden + 1) for _ in range(n_out)]
    xs = X.tolist()
    ts = T.tolist()
    h = [0.0] * n_hidden
    o = [0.0] * n_out
    delta_o = [0.0] * n_out
    delta_h = [0.0] * n_hidden
    for idx in order.tolist():
        x = xs[idx]
        t = ts[idx]
        for j in range(n_hidden):
            row = w1[j]
            s = row[n_in]
            for i in range(n_in):
                s += row[i] * x[i]
            h[j] = _sigmoid(s)
        for k in range(n_out):
            row = w2[k]
            s = row[n_hidden]
            for j in range(n_hidden):
                s += row[j] * h[j]
            o[k] = _sigmoid(s)
        for k in range(n_out):
            delta_o[k] = (o[k] - t[k]) * o[k] * (1.0 - o[k])
        for j in range(n_hidden):
            s = 0.0
            for k in range(n_out):
                s += delta_o[k] * w2[k][j]
            delta_h[j] = h[j] * (1.0 - h[j]) * s
        for k in range(n_out):
            row = w2[k]
            drow = d2[k]
            g = delta_o[k]
            for j in range(n_hidden):
                d = -lr * (g * h[j]) + momentum * drow[j]
                drow[j] = d
                row[j] += d
            d = -lr * g + momentum * drow[n_hidden]
            drow[n_hidden] = d
            row[n_hidden] += d
        for j in range(n_hidden):
            row = w1[j]
            drow = d1[j]
            g = delta_h[j]
            for i in range(n_in):
                d = -lr * (g * x[i]) + momentum * drow[i]
                drow[i] = d
                row[i] += d
            d = -lr * g + momentum * drow[n_in]
            drow[n_in] = d
            row[n_in] += d
    W1[...] = w1
    W2[...] = w2
