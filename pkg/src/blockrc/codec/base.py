"""Codec backend contract shared by the synthetic and transform backends."""

from __future__ import annotations

import abc
from dataclasses import dataclass

import numpy as np

from ..grid import Block


class UnsupportedBlockSize(ValueError):
    """Block dimensions outside what the backend can encode."""


class CorruptPayload(ValueError):
    """Payload does not decode under the stated (width, height, lam)."""


@dataclass(frozen=True)
class CodecInfo:
    """Capability descriptor for a backend.

    ``analytic`` marks backends whose reported distortion comes from a model
    rather than from the reconstruction; ``produces_bitstream`` marks ones
    whose rate is an exact payload bit count.
    """

    name: str
    deterministic: bool
    min_block_dim: int
    produces_bitstream: bool
    analytic: bool


@dataclass(frozen=True)
class EncodeResult:
    payload: bytes
    payload_bits: int
    rate: float
    distortion: float
    reconstruction: np.ndarray

    def __post_init__(self):
        if self.payload_bits < 0 or self.rate < 0.0 or self.distortion < 0.0:
            raise ValueError("negative rate/distortion/bit count")


class CodecBackend(abc.ABC):
    """Deterministic mapping (block, lam) -> (payload, rate, reconstruction).

    Backends are cheap to instantiate and keep no cross-call state, so one
    instance per worker is safe; entropy-coder state never spans blocks.
    """

    info: CodecInfo

    @abc.abstractmethod
    def encode(self, block: Block, lam: float) -> EncodeResult:
        raise NotImplementedError

    @abc.abstractmethod
    def decode(self, payload: bytes, width: int, height: int, lam: float) -> np.ndarray:
        raise NotImplementedError


class CallCountingBackend(CodecBackend):
    """Wrapper that counts encode invocations, for call accounting."""

    def __init__(self, inner: CodecBackend):
        self.inner = inner
        self.info = inner.info
        self.encode_calls = 0

    def encode(self, block: Block, lam: float) -> EncodeResult:
        self.encode_calls += 1
        return self.inner.encode(block, lam)

    def decode(self, payload: bytes, width: int, height: int, lam: float) -> np.ndarray:
        return self.inner.decode(payload, width, height, lam)
