"""Pure-Python adaptive binary range coder for DCT coefficient streams.

Fallback twin of the compiled extension (_coder.pyx): both implement the
identical integer algorithm and must produce bit-identical payloads.  Any
change here has to be mirrored there.

The coefficient binarization, per value in tile-zigzag order:
  1. significance flag (context chosen by zigzag band),
  2. sign as a raw half-probability bit,
  3. magnitude-1 in unary capped at MAG_CAP (context per unary position),
  4. on cap overflow, a 16-bit fixed-length residual of raw bits.
Context counts start at (1, 1), increment by 1, and halve at 1024.
"""

from __future__ import annotations

import numpy as np

STATE_MASK = (1 << 32) - 1
TOP_BIT = 1 << 31
SECOND_BIT = 1 << 30

ADAPT_LIMIT = 1024
MAG_CAP = 12
ESC_BITS = 16

SIG_CTXS = 4  # zigzag bands: DC, 1-5, 6-20, 21-63
MAG_CTXS = 6
N_CTX = SIG_CTXS + MAG_CTXS
TILE = 64

# Trailing 16-bit sentinel; a mismatch at decode flags truncation/corruption.
SENTINEL = 0xA55A


def _band(pos: int) -> int:
    if pos == 0:
        return 0
    if pos < 6:
        return 1
    if pos < 21:
        return 2
    return 3


class _Encoder:
    def __init__(self):
        self.low = 0
        self.high = STATE_MASK
        self.pending = 0
        self.buf = bytearray()
        self.acc = 0
        self.nacc = 0
        self.nbits = 0
        self.c0 = [1] * N_CTX
        self.c1 = [1] * N_CTX

    def _put(self, bit: int) -> None:
        self.acc = (self.acc << 1) | bit
        self.nacc += 1
        self.nbits += 1
        if self.nacc == 8:
            self.buf.append(self.acc)
            self.acc = 0
            self.nacc = 0

    def _emit(self, bit: int) -> None:
        self._put(bit)
        flip = bit ^ 1
        while self.pending:
            self._put(flip)
            self.pending -= 1

    def _narrow(self, c0: int, total: int, bit: int) -> None:
        rng = self.high - self.low + 1
        mid = self.low + rng * c0 // total
        if bit:
            self.low = mid
        else:
            self.high = mid - 1
        while ((self.low ^ self.high) & TOP_BIT) == 0:
            self._emit(self.low >> 31)
            self.low = (self.low << 1) & STATE_MASK
            self.high = ((self.high << 1) & STATE_MASK) | 1
        while self.low & ~self.high & SECOND_BIT:
            self.pending += 1
            self.low = (self.low << 1) & (STATE_MASK >> 1)
            self.high = ((self.high << 1) & (STATE_MASK >> 1)) | TOP_BIT | 1

    def bit_ctx(self, ctx: int, bit: int) -> None:
        c0, c1 = self.c0[ctx], self.c1[ctx]
        self._narrow(c0, c0 + c1, bit)
        if bit:
            c1 += 1
        else:
            c0 += 1
        if c0 + c1 >= ADAPT_LIMIT:
            c0 = (c0 + 1) >> 1
            c1 = (c1 + 1) >> 1
        self.c0[ctx], self.c1[ctx] = c0, c1

    def bit_raw(self, bit: int) -> None:
        self._narrow(1, 2, bit)

    def finish(self) -> tuple[bytes, int]:
        self._emit(1)
        nbits = self.nbits
        if self.nacc:
            self.buf.append(self.acc << (8 - self.nacc))
        return bytes(self.buf), nbits


class _Decoder:
    def __init__(self, payload: bytes):
        self.data = payload
        self.pos = 0
        self.acc = 0
        self.nacc = 0
        self.low = 0
        self.high = STATE_MASK
        self.code = 0
        self.c0 = [1] * N_CTX
        self.c1 = [1] * N_CTX
        for _ in range(32):
            self.code = (self.code << 1) | self._get()

    def _get(self) -> int:
        if self.nacc == 0:
            if self.pos >= len(self.data):
                return 0  # zero padding past the payload end
            self.acc = self.data[self.pos]
            self.pos += 1
            self.nacc = 8
        self.nacc -= 1
        return (self.acc >> self.nacc) & 1

    def _narrow(self, c0: int, total: int) -> int:
        rng = self.high - self.low + 1
        mid = self.low + rng * c0 // total
        bit = 1 if self.code >= mid else 0
        if bit:
            self.low = mid
        else:
            self.high = mid - 1
        while ((self.low ^ self.high) & TOP_BIT) == 0:
            self.code = ((self.code << 1) & STATE_MASK) | self._get()
            self.low = (self.low << 1) & STATE_MASK
            self.high = ((self.high << 1) & STATE_MASK) | 1
        while self.low & ~self.high & SECOND_BIT:
            self.code = (
                (self.code & TOP_BIT)
                | ((self.code << 1) & (STATE_MASK >> 1))
                | self._get()
            )
            self.low = (self.low << 1) & (STATE_MASK >> 1)
            self.high = ((self.high << 1) & (STATE_MASK >> 1)) | TOP_BIT | 1
        return bit

    def bit_ctx(self, ctx: int) -> int:
        c0, c1 = self.c0[ctx], self.c1[ctx]
        bit = self._narrow(c0, c0 + c1)
        if bit:
            c1 += 1
        else:
            c0 += 1
        if c0 + c1 >= ADAPT_LIMIT:
            c0 = (c0 + 1) >> 1
            c1 = (c1 + 1) >> 1
        self.c0[ctx], self.c1[ctx] = c0, c1
        return bit

    def bit_raw(self) -> int:
        return self._narrow(1, 2)


def encode_coefficients(values) -> tuple[bytes, int]:
    """Encode int coefficients (concatenated 64-long zigzag tiles).

    Returns (payload bytes, exact bit count before byte padding).
    """
    vals = np.ascontiguousarray(values, dtype=np.int32)
    if vals.ndim != 1 or vals.size % TILE != 0:
        raise ValueError("coefficient stream must be 1-D with length % 64 == 0")
    enc = _Encoder()
    for i, v in enumerate(vals.tolist()):
        sig_ctx = _band(i & (TILE - 1))
        if v == 0:
            enc.bit_ctx(sig_ctx, 0)
            continue
        enc.bit_ctx(sig_ctx, 1)
        enc.bit_raw(1 if v < 0 else 0)
        m1 = (-v if v < 0 else v) - 1
        u = m1 if m1 < MAG_CAP else MAG_CAP
        for k in range(u):
            enc.bit_ctx(SIG_CTXS + (k if k < MAG_CTXS - 1 else MAG_CTXS - 1), 1)
        if u < MAG_CAP:
            enc.bit_ctx(SIG_CTXS + (u if u < MAG_CTXS - 1 else MAG_CTXS - 1), 0)
        else:
            resid = m1 - MAG_CAP
            if resid >= (1 << ESC_BITS):
                raise OverflowError(f"coefficient magnitude {m1 + 1} too large")
            for j in range(ESC_BITS - 1, -1, -1):
                enc.bit_raw((resid >> j) & 1)
    for j in range(15, -1, -1):
        enc.bit_raw((SENTINEL >> j) & 1)
    return enc.finish()


def decode_coefficients(payload: bytes, count: int) -> np.ndarray:
    """Decode `count` coefficients from a payload made by encode_coefficients."""
    if count % TILE != 0:
        raise ValueError("coefficient count must be a multiple of 64")
    dec = _Decoder(payload)
    out = np.empty(count, dtype=np.int32)
    for i in range(count):
        sig_ctx = _band(i & (TILE - 1))
        if not dec.bit_ctx(sig_ctx):
            out[i] = 0
            continue
        neg = dec.bit_raw()
        m1 = 0
        while m1 < MAG_CAP:
            k = m1 if m1 < MAG_CTXS - 1 else MAG_CTXS - 1
            if not dec.bit_ctx(SIG_CTXS + k):
                break
            m1 += 1
        if m1 == MAG_CAP:
            resid = 0
            for _ in range(ESC_BITS):
                resid = (resid << 1) | dec.bit_raw()
            m1 += resid
        out[i] = (-(m1 + 1)) if neg else (m1 + 1)
    check = 0
    for _ in range(16):
        check = (check << 1) | dec.bit_raw()
    if check != SENTINEL:
        raise ValueError("payload sentinel mismatch (truncated or corrupt)")
    return out
