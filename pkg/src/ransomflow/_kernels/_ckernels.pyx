# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Semantics match ``_fallback`` exactly."""
from libc.math cimport exp, INFINITY
from libc.stdlib cimport calloc, free

import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef inline unsigned int _u32(const unsigned char* p, bint big):
    if big:
        return (<unsigned int>p[0] << 24) | (<unsigned int>p[1] << 16) | (<unsigned int>p[2] << 8) | p[3]
    return (<unsigned int>p[3] << 24) | (<unsigned int>p[2] << 16) | (<unsigned int>p[1] << 8) | p[0]

cdef inline unsigned int _be16(const unsigned char* p):
    return (<unsigned int>p[0] << 8) | p[1]


cdef object _decode(const unsigned char* f, Py_ssize_t incl, unsigned int orig):
    cdef Py_ssize_t off = 14, ihl, thdr, end
    cdef unsigned int ethertype, vihl, total_len, proto
    if incl < 14:
        return "bad-length"
    ethertype = _be16(f + 12)
    if ethertype == 0x8100:
        if incl < 18:
            return "bad-length"
        ethertype = _be16(f + 16)
        off = 18
    if ethertype != 0x0800:
        return "non-ip"
    if incl < off + 20:
        return "bad-length"
    vihl = f[off]
    if (vihl >> 4) != 4:
        return "ip-version"
    ihl = (vihl & 0x0F) * 4
    if ihl < 20:
        return "bad-length"
    total_len = _be16(f + off + 2)
    if total_len < ihl:
        return "bad-length"
    if _be16(f + off + 6) & 0x1FFF:
        return "fragment"
    proto = f[off + 9]
    if proto == 6:
        thdr = 20
    elif proto == 17:
        thdr = 8
    else:
        return "non-tcp-udp"
    end = off + ihl + thdr
    if incl < end or total_len < ihl + thdr or orig < end or orig < incl:
        return "bad-length"
    return (proto, f[off + 12:off + 16], _be16(f + off + ihl),
            f[off + 16:off + 20], _be16(f + off + ihl + 2))


def decode_frame(frame, orig_len):
    cdef const unsigned char[:] view = frame
    cdef Py_ssize_t n = view.shape[0]
    if n == 0:
        return "bad-length"
    return _decode(&view[0], n, orig_len)


def scan_records(buf, Py_ssize_t pos, bint big_endian, bint nano, bint final):
    cdef const unsigned char[:] view = buf
    cdef Py_ssize_t n = view.shape[0], remaining, start
    cdef const unsigned char* base
    cdef unsigned int ts_sec, ts_frac, incl, orig
    cdef double scale = 1000000000.0 if nano else 1000000.0
    cdef list events = []
    cdef bint truncated = False
    if n == 0:
        return events, pos, truncated
    base = &view[0]
    while True:
        remaining = n - pos
        if remaining < 16:
            if final and remaining > 0:
                truncated = True
                pos = n
            break
        ts_sec = _u32(base + pos, big_endian)
        ts_frac = _u32(base + pos + 4, big_endian)
        incl = _u32(base + pos + 8, big_endian)
        orig = _u32(base + pos + 12, big_endian)
        if remaining - 16 < <Py_ssize_t>incl:
            if final:
                events.append("truncated")
                truncated = True
                pos = n
            break
        start = pos + 16
        decoded = _decode(base + start, incl, orig)
        pos = start + incl
        if type(decoded) is str:
            events.append(decoded)
        else:
            events.append((<double>ts_sec + <double>ts_frac / scale,) + decoded + (orig,))
    return events, pos, truncated


def best_threshold(const double[:] values, const cnp.int64_t[:] labels, int n_classes,
                   Py_ssize_t min_leaf, const double[:] nlogn):
    cdef Py_ssize_t n = values.shape[0], i, nl, nr, best = -1
    cdef int c
    cdef double parent, lterm, rterm, g, best_gain = -INFINITY
    cdef cnp.int64_t* totals
    cdef cnp.int64_t* left
    if n < 2:
        return -INFINITY, -1
    totals = <cnp.int64_t*>calloc(n_classes, sizeof(cnp.int64_t))
    left = <cnp.int64_t*>calloc(n_classes, sizeof(cnp.int64_t))
    try:
        for i in range(n):
            totals[labels[i]] += 1
        parent = nlogn[n]
        for c in range(n_classes):
            parent = parent - nlogn[totals[c]]
        for i in range(n - 1):
            left[labels[i]] += 1
            nl = i + 1
            nr = n - nl
            if not (values[i] < values[i + 1]) or nl < min_leaf or nr < min_leaf:
                continue
            lterm = nlogn[nl]
            rterm = nlogn[nr]
            for c in range(n_classes):
                lterm = lterm - nlogn[left[c]]
                rterm = rterm - nlogn[totals[c] - left[c]]
            g = (parent - lterm - rterm) / n
            if g > best_gain:
                best_gain = g
                best = i
    finally:
        free(totals)
        free(left)
    return best_gain, best


cdef inline double _sigmoid(double s) nogil:
    if s < -500.0:
        s = -500.0
    elif s > 500.0:
        s = 500.0
    return 1.0 / (1.0 + exp(-s))


def mlp_train(const double[:, :] X, const double[:, :] T, double[:, :] W1, double[:, :] W2,
              const cnp.int64_t[:] order, double lr, double momentum):
    cdef Py_ssize_t n_hidden = W1.shape[0], n_in = W1.shape[1] - 1, n_out = W2.shape[0]
    cdef Py_ssize_t step, idx, i, j, k
    cdef double s, g, d
    d1_arr = np.zeros((n_hidden, n_in + 1))
    d2_arr = np.zeros((n_out, n_hidden + 1))
    h_arr = np.zeros(n_hidden)
    o_arr = np.zeros(n_out)
    do_arr = np.zeros(n_out)
    dh_arr = np.zeros(n_hidden)
    cdef double[:, :] d1 = d1_arr
    cdef double[:, :] d2 = d2_arr
    cdef double[:] h = h_arr
    cdef double[:] o = o_arr
    cdef double[:] delta_o = do_arr
    cdef double[:] delta_h = dh_arr
    with nogil:
        for step in range(order.shape[0]):
            idx = order[step]
            for j in range(n_hidden):
                s = W1[j, n_in]
                for i in range(n_in):
                    s += W1[j, i] * X[idx, i]
                h[j] = _sigmoid(s)
            for k in range(n_out):
                s = W2[k, n_hidden]
                for j in range(n_hidden):
                    s += W2[k, j] * h[j]
                o[k] = _sigmoid(s)
            for k in range(n_out):
                delta_o[k] = (o[k] - T[idx, k]) * o[k] * (1.0 - o[k])
            for j in range(n_hidden):
                s = 0.0
                for k in range(n_out):
                    s += delta_o[k] * W2[k, j]
                delta_h[j] = h[j] * (1.0 - h[j]) * s
            for k in range(n_out):
                g = delta_o[k]
                for j in range(n_hidden):
                    d = -lr * (g * h[j]) + momentum * d2[k, j]
                    d2[k, j] = d
                    W2[k, j] += d
                d = -lr * g + momentum * d2[k, n_hidden]
                d2[k, n_hidden] = d
                W2[k, n_hidden] += d
            for j in range(n_hidden):
                g = delta_h[j]
                for i in range(n_in):
                    d = -lr * (g * X[idx, i]) + momentum * d1[j, i]
                    d1[j, i] = d
                    W1[j, i] += d
                d = -lr * g + momentum * d1[j, n_in]
                d1[j, n_in] = d
                W1[j, n_in] += d
