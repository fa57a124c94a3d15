# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled adaptive binary range coder for DCT coefficient streams.

Bit-identical twin of _coder_py; see that module for the format notes.
Any change here has to be mirrored there.
"""

from libc.stdlib cimport calloc, free

import numpy as np

cdef enum:
    ADAPT_LIMIT = 1024
    MAG_CAP = 12
    ESC_BITS = 16
    SIG_CTXS = 4
    MAG_CTXS = 6
    N_CTX = SIG_CTXS + MAG_CTXS
    TILE = 64
    SENTINEL = 0xA55A

cdef unsigned long long STATE_MASK = 0xFFFFFFFFULL
cdef unsigned long long TOP_BIT = 0x80000000ULL
cdef unsigned long long SECOND_BIT = 0x40000000ULL


cdef inline int _c_band(int pos) nogil:
    if pos == 0:
        return 0
    if pos < 6:
        return 1
    if pos < 21:
        return 2
    return 3


cdef struct Enc:
    unsigned long long low
    unsigned long long high
    long long pending
    long long nbits
    unsigned char* buf
    unsigned int c0[N_CTX]
    unsigned int c1[N_CTX]


cdef inline void _enc_put(Enc* e, int bit) nogil:
    if bit:
        e.buf[e.nbits >> 3] |= <unsigned char> (1 << (7 - (e.nbits & 7)))
    e.nbits += 1


cdef inline void _enc_emit(Enc* e, int bit) nogil:
    _enc_put(e, bit)
    while e.pending:
        _enc_put(e, bit ^ 1)
        e.pending -= 1


cdef inline void _enc_narrow(Enc* e, unsigned long long c0,
                             unsigned long long total, int bit) nogil:
    cdef unsigned long long rng = e.high - e.low + 1
    cdef unsigned long long mid = e.low + rng * c0 / total
    if bit:
        e.low = mid
    else:
        e.high = mid - 1
    while ((e.low ^ e.high) & TOP_BIT) == 0:
        _enc_emit(e, <int> (e.low >> 31))
        e.low = (e.low << 1) & STATE_MASK
        e.high = ((e.high << 1) & STATE_MASK) | 1
    while e.low & (~e.high) & SECOND_BIT:
        e.pending += 1
        e.low = (e.low << 1) & (STATE_MASK >> 1)
        e.high = ((e.high << 1) & (STATE_MASK >> 1)) | TOP_BIT | 1


cdef inline void _enc_bit_ctx(Enc* e, int ctx, int bit) nogil:
    cdef unsigned int c0 = e.c0[ctx]
    cdef unsigned int c1 = e.c1[ctx]
    _enc_narrow(e, c0, c0 + c1, bit)
    if bit:
        c1 += 1
    else:
        c0 += 1
    if c0 + c1 >= ADAPT_LIMIT:
        c0 = (c0 + 1) >> 1
        c1 = (c1 + 1) >> 1
    e.c0[ctx] = c0
    e.c1[ctx] = c1


cdef inline void _enc_bit_raw(Enc* e, int bit) nogil:
    _enc_narrow(e, 1, 2, bit)


def encode_coefficients(values):
    """Encode int coefficients (concatenated 64-long zigzag tiles).

    Returns (payload bytes, exact bit count before byte padding).
    """
    arr = np.ascontiguousarray(values, dtype=np.int32)
    if arr.ndim != 1 or arr.size % TILE != 0:
        raise ValueError("coefficient stream must be 1-D with length % 64 == 0")
    cdef const int[::1] v = arr
    cdef Py_ssize_t n = v.shape[0]
    # worst case per value: 1 sig + 1 sign + 12 unary + 16 escape bits,
    # plus sentinel, terminator, and renorm slack
    cdef size_t cap_bytes = <size_t> ((n * 30 + 256) // 8 + 16)
    cdef Enc e
    e.low = 0
    e.high = STATE_MASK
    e.pending = 0
    e.nbits = 0
    e.buf = <unsigned char*> calloc(cap_bytes, 1)
    if e.buf == NULL:
        raise MemoryError()
    cdef Py_ssize_t i
    cdef int val, m1, u, k, j, sig_ctx, resid
    for i in range(N_CTX):
        e.c0[i] = 1
        e.c1[i] = 1
    try:
        with nogil:
            for i in range(n):
                sig_ctx = _c_band(i & (TILE - 1))
                val = v[i]
                if val == 0:
                    _enc_bit_ctx(&e, sig_ctx, 0)
                    continue
                _enc_bit_ctx(&e, sig_ctx, 1)
                _enc_bit_raw(&e, 1 if val < 0 else 0)
                m1 = (-val if val < 0 else val) - 1
                u = m1 if m1 < MAG_CAP else MAG_CAP
                for k in range(u):
                    _enc_bit_ctx(&e, SIG_CTXS + (k if k < MAG_CTXS - 1 else MAG_CTXS - 1), 1)
                if u < MAG_CAP:
                    _enc_bit_ctx(&e, SIG_CTXS + (u if u < MAG_CTXS - 1 else MAG_CTXS - 1), 0)
                else:
                    resid = m1 - MAG_CAP
                    if resid >= (1 << ESC_BITS):
                        with gil:
                            raise OverflowError(f"coefficient magnitude {m1 + 1} too large")
                    for j in range(ESC_BITS - 1, -1, -1):
                        _enc_bit_raw(&e, (resid >> j) & 1)
            for j in range(15, -1, -1):
                _enc_bit_raw(&e, (SENTINEL >> j) & 1)
            _enc_emit(&e, 1)
        payload = bytes(e.buf[0 : (e.nbits + 7) // 8])
        return payload, int(e.nbits)
    finally:
        free(e.buf)


cdef struct Dec:
    unsigned long long low
    unsigned long long high
    unsigned long long code
    const unsigned char* data
    Py_ssize_t size
    Py_ssize_t pos
    int acc
    int nacc
    unsigned int c0[N_CTX]
    unsigned int c1[N_CTX]


cdef inline int _dec_get(Dec* d) nogil:
    if d.nacc == 0:
        if d.pos >= d.size:
            return 0
        d.acc = d.data[d.pos]
        d.pos += 1
        d.nacc = 8
    d.nacc -= 1
    return (d.acc >> d.nacc) & 1


cdef inline int _dec_narrow(Dec* d, unsigned long long c0,
                            unsigned long long total) nogil:
    cdef unsigned long long rng = d.high - d.low + 1
    cdef unsigned long long mid = d.low + rng * c0 / total
    cdef int bit = 1 if d.code >= mid else 0
    if bit:
        d.low = mid
    else:
        d.high = mid - 1
    while ((d.low ^ d.high) & TOP_BIT) == 0:
        d.code = ((d.code << 1) & STATE_MASK) | <unsigned long long> _dec_get(d)
        d.low = (d.low << 1) & STATE_MASK
        d.high = ((d.high << 1) & STATE_MASK) | 1
    while d.low & (~d.high) & SECOND_BIT:
        d.code = ((d.code & TOP_BIT)
                  | ((d.code << 1) & (STATE_MASK >> 1))
                  | <unsigned long long> _dec_get(d))
        d.low = (d.low << 1) & (STATE_MASK >> 1)
        d.high = ((d.high << 1) & (STATE_MASK >> 1)) | TOP_BIT | 1
    return bit


cdef inline int _dec_bit_ctx(Dec* d, int ctx) nogil:
    cdef unsigned int c0 = d.c0[ctx]
    cdef unsigned int c1 = d.c1[ctx]
    cdef int bit = _dec_narrow(d, c0, c0 + c1)
    if bit:
        c1 += 1
    else:
        c0 += 1
    if c0 + c1 >= ADAPT_LIMIT:
        c0 = (c0 + 1) >> 1
        c1 = (c1 + 1) >> 1
    d.c0[ctx] = c0
    d.c1[ctx] = c1
    return bit


cdef inline int _dec_bit_raw(Dec* d) nogil:
    return _dec_narrow(d, 1, 2)


def decode_coefficients(payload, count):
    """Decode `count` coefficients from a payload made by encode_coefficients."""
    cdef Py_ssize_t n = count
    if n % TILE != 0:
        raise ValueError("coefficient count must be a multiple of 64")
    data = bytes(payload)
    out = np.empty(n, dtype=np.int32)
    cdef int[::1] o = out
    cdef Dec d
    d.low = 0
    d.high = STATE_MASK
    d.code = 0
    d.data = data
    d.size = len(data)
    d.pos = 0
    d.acc = 0
    d.nacc = 0
    cdef Py_ssize_t i
    cdef int k, m1, neg, resid, check, j
    for i in range(N_CTX):
        d.c0[i] = 1
        d.c1[i] = 1
    with nogil:
        for j in range(32):
            d.code = (d.code << 1) | <unsigned long long> _dec_get(&d)
        for i in range(n):
            if _dec_bit_ctx(&d, _c_band(i & (TILE - 1))) == 0:
                o[i] = 0
                continue
            neg = _dec_bit_raw(&d)
            m1 = 0
            while m1 < MAG_CAP:
                k = m1 if m1 < MAG_CTXS - 1 else MAG_CTXS - 1
                if _dec_bit_ctx(&d, SIG_CTXS + k) == 0:
                    break
                m1 += 1
            if m1 == MAG_CAP:
                resid = 0
                for j in range(ESC_BITS):
                    resid = (resid << 1) | _dec_bit_raw(&d)
                m1 += resid
            o[i] = -(m1 + 1) if neg else (m1 + 1)
        check = 0
        for j in range(16):
            check = (check << 1) | _dec_bit_raw(&d)
    if check != SENTINEL:
        raise ValueError("payload sentinel mismatch (truncated or corrupt)")
    return out
