"""Pluggable block codec backends."""

from .base import (
    CallCountingBackend,
    CodecBackend,
    CodecInfo,
    CorruptPayload,
    EncodeResult,
    UnsupportedBlockSize,
)
from .dct import DctBackend, dct_encode_block, lambda_to_qstep, psnr
from .synthetic import DEFAULT_SPEC, AffineMap, SyntheticBackend, SyntheticSpec


def get_backend(name: str, *, seed: int = 0, spec=None) -> CodecBackend:
    """Instantiate a backend by CLI name."""
    if name == "dct":
        return DctBackend()
    if name == "synthetic":
        return SyntheticBackend(spec=spec or DEFAULT_SPEC, seed=seed)
    raise ValueError(f"unknown backend {name!r}")


__all__ = [
    "AffineMap",
    "CallCountingBackend",
    "CodecBackend",
    "CodecInfo",
    "CorruptPayload",
    "DEFAULT_SPEC",
    "DctBackend",
    "EncodeResult",
    "SyntheticBackend",
    "SyntheticSpec",
    "UnsupportedBlockSize",
    "dct_encode_block",
    "get_backend",
    "lambda_to_qstep",
    "psnr",
]
