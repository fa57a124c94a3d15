"""BRC1 bitstream container for full-image block encodes.

Layout (all integers big-endian):
    magic "BRC1"
    image width  : u32
    image height : u32
    block_size   : u16
    block count  : u32
    per block, raster order:
        lam fixed-point (round(lam * 10000)) : u16
        payload bit length                   : u32
        payload bytes, zero-padded to a byte boundary
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

MAGIC = b"BRC1"
LAMBDA_SCALE = 10000


class ContainerError(ValueError):
    """Malformed or truncated BRC1 container."""


def quantize_lambda(lam: float) -> float:
    """Round lam onto the container's fixed-point grid.

    Encoders must quantize before the final coding pass so the lam stored in
    the container reproduces the encoder's quantizer exactly at decode time.
    """
    return round(lam * LAMBDA_SCALE) / LAMBDA_SCALE


@dataclass(frozen=True)
class BlockRecord:
    lam: float
    payload_bits: int
    payload: bytes


@dataclass(frozen=True)
class Container:
    image_width: int
    image_height: int
    block_size: int
    records: tuple[BlockRecord, ...]


def write_container(path, width: int, height: int, block_size: int,
                    records) -> None:
    records = tuple(records)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack(">IIHI", width, height, block_size, len(records)))
        for rec in records:
            fixed = round(rec.lam * LAMBDA_SCALE)
            if not 1 <= fixed <= LAMBDA_SCALE:
                raise ContainerError(f"lam {rec.lam} outside fixed-point range")
            if rec.payload_bits < 0 or len(rec.payload) != (rec.payload_bits + 7) // 8:
                raise ContainerError(
                    f"payload length {len(rec.payload)} does not match "
                    f"{rec.payload_bits} bits"
                )
            fh.write(struct.pack(">HI", fixed, rec.payload_bits))
            fh.write(rec.payload)


def read_container(path) -> Container:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != MAGIC:
        raise ContainerError(f"bad magic {data[:4]!r}")
    if len(data) < 4 + 14:
        raise ContainerError("truncated header")
    width, height, block_size, count = struct.unpack(">IIHI", data[4:18])
    if width < 1 or height < 1 or count < 1:
        raise ContainerError(
            f"invalid geometry {width}x{height} with {count} blocks"
        )
    if block_size < 8:
        raise ContainerError(f"block_size {block_size} < 8")
    expected = -(-width // block_size) * -(-height // block_size)
    if count != expected:
        raise ContainerError(
            f"block count {count} does not tile {width}x{height} "
            f"at block_size {block_size} (expected {expected})"
        )

    pos = 18
    records = []
    for i in range(count):
        if pos + 6 > len(data):
            raise ContainerError(f"truncated at block {i} header")
        fixed, bits = struct.unpack(">HI", data[pos : pos + 6])
        pos += 6
        if not 1 <= fixed <= LAMBDA_SCALE:
            raise ContainerError(f"block {i}: lam fixed-point {fixed} out of range")
        nbytes = (bits + 7) // 8
        if pos + nbytes > len(data):
            raise ContainerError(f"truncated at block {i} payload")
        records.append(
            BlockRecord(
                lam=fixed / LAMBDA_SCALE,
                payload_bits=bits,
                payload=data[pos : pos + nbytes],
            )
        )
        pos += nbytes
    if pos != len(data):
        raise ContainerError(f"{len(data) - pos} trailing bytes")
    return Container(
        image_width=width,
        image_height=height,
        block_size=block_size,
        records=tuple(records),
    )
