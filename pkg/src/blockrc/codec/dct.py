"""Transform backend: 8x8 DCT, uniform quantization, range-coded payloads.

The quality factor lam in (0, 1] maps to a quantizer step on a log scale
between 1 (near-lossless) and 64 (coarse).  Blocks are padded to 8x8 tile
multiples by edge replication; rate and distortion are reported over the
unpadded pixels.  Reconstruction is computed from the quantized integers
through the exact path the decoder uses, so encode/decode round trips are
bit-exact.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.fft import dctn, idctn

from ..grid import Block
from .base import CodecBackend, CodecInfo, CorruptPayload, EncodeResult, UnsupportedBlockSize
from . import coder

Q_MIN = 1.0
Q_MAX = 64.0


def _zigzag_order(n: int = 8) -> np.ndarray:
    """Flat indices of the classic zigzag scan over an n x n tile."""
    order = []
    for d in range(2 * n - 1):
        rows = range(max(0, d - n + 1), min(d, n - 1) + 1)
        if d % 2 == 0:
            rows = reversed(rows)
        order.extend(r * n + (d - r) for r in rows)
    return np.array(order, dtype=np.int64)


ZIGZAG = _zigzag_order()


def lambda_to_qstep(lam: float) -> float:
    """Log-interpolated quantizer step: 1.0 at lam=1, toward 64 as lam->0."""
    if not 0.0 < lam <= 1.0:
        raise ValueError(f"lam {lam} outside (0, 1]")
    return Q_MAX * (Q_MIN / Q_MAX) ** lam


def _pad_to_tiles(pixels: np.ndarray) -> np.ndarray:
    h, w = pixels.shape
    ph = -h % 8
    pw = -w % 8
    if ph or pw:
        return np.pad(pixels, ((0, ph), (0, pw)), mode="edge")
    return pixels


def _to_tiles(padded: np.ndarray) -> np.ndarray:
    """(H, W) -> (n_tiles, 8, 8) in raster tile order."""
    h, w = padded.shape
    return (
        padded.reshape(h // 8, 8, w // 8, 8).transpose(0, 2, 1, 3).reshape(-1, 8, 8)
    )


def _from_tiles(tiles: np.ndarray, h: int, w: int) -> np.ndarray:
    th, tw = h // 8, w // 8
    return tiles.reshape(th, tw, 8, 8).transpose(0, 2, 1, 3).reshape(h, w)


def _quantize(pixels: np.ndarray, qstep: float) -> np.ndarray:
    """Pixels -> flat zigzag-ordered quantized coefficients (int32)."""
    padded = _pad_to_tiles(pixels)
    tiles = _to_tiles(padded.astype(np.float64) - 128.0)
    coefs = dctn(tiles, axes=(1, 2), norm="ortho")
    q = np.rint(coefs / qstep).astype(np.int32)
    return q.reshape(-1, 64)[:, ZIGZAG].reshape(-1)


def _reconstruct(qvals: np.ndarray, width: int, height: int, qstep: float) -> np.ndarray:
    """Quantized zigzag coefficients -> uint8 reconstruction (unpadded)."""
    ph = height + (-height % 8)
    pw = width + (-width % 8)
    tiles64 = np.zeros((qvals.size // 64, 64), dtype=np.float64)
    tiles64[:, ZIGZAG] = qvals.reshape(-1, 64) * qstep
    pix = idctn(tiles64.reshape(-1, 8, 8), axes=(1, 2), norm="ortho") + 128.0
    full = _from_tiles(pix, ph, pw)[:height, :width]
    return np.clip(np.rint(full), 0, 255).astype(np.uint8)


def dct_encode_block(pixels: np.ndarray, qstep: float) -> EncodeResult:
    """Encode a 2-D uint8 pixel array at a fixed quantizer step."""
    if pixels.ndim != 2 or pixels.shape[0] < 1 or pixels.shape[1] < 1:
        raise UnsupportedBlockSize(f"bad block shape {pixels.shape}")
    h, w = pixels.shape
    qvals = _quantize(pixels, qstep)
    payload, bits = coder.encode_coefficients(qvals)
    recon = _reconstruct(qvals, w, h, qstep)
    err = pixels.astype(np.float64) - recon.astype(np.float64)
    return EncodeResult(
        payload=payload,
        payload_bits=bits,
        rate=bits / (h * w),
        distortion=float(np.mean(err * err)),
        reconstruction=recon,
    )


class DctBackend(CodecBackend):
    info = CodecInfo(
        name="dct",
        deterministic=True,
        min_block_dim=1,
        produces_bitstream=True,
        analytic=False,
    )

    def encode(self, block: Block, lam: float) -> EncodeResult:
        return dct_encode_block(block.pixels, lambda_to_qstep(lam))

    def decode(self, payload: bytes, width: int, height: int, lam: float) -> np.ndarray:
        if width < 1 or height < 1:
            raise CorruptPayload(f"bad dimensions {width}x{height}")
        if len(payload) == 0:
            raise CorruptPayload("zero-length payload for nonzero dimensions")
        qstep = lambda_to_qstep(lam)
        ph = height + (-height % 8)
        pw = width + (-width % 8)
        count = ph * pw
        try:
            qvals = coder.decode_coefficients(payload, count)
        except ValueError as exc:
            raise CorruptPayload(str(exc)) from exc
        return _reconstruct(qvals, width, height, qstep)


def psnr(mse: float) -> float:
    """Peak signal-to-noise ratio in dB for 8-bit samples."""
    if mse <= 0.0:
        return math.inf
    return 10.0 * math.log10(255.0**2 / mse)
