"""Analytic backend with exactly known rate/distortion behavior.

Rates and distortions follow the log-linear models directly, with the four
coefficients given as affine functions of the block gradient.  With zero
noise the backend makes every stage of the pipeline oracle-checkable; with
noise it emulates measurement jitter, seeded per (block, lam) so runs are
reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..grid import Block
from .base import CodecBackend, CodecInfo, CorruptPayload, EncodeResult


@dataclass(frozen=True)
class AffineMap:
    offset: float
    slope: float

    def __call__(self, g: float) -> float:
        return self.offset + self.slope * g


@dataclass(frozen=True)
class SyntheticSpec:
    """Ground-truth coefficient maps over gradient, plus noise amplitude.

    ``noise_amplitude`` is fractional: each measured rate/distortion is the
    true value times (1 + u*amplitude) with u uniform in [-1, 1].
    """

    a: AffineMap
    b: AffineMap
    a_prime: AffineMap
    b_prime: AffineMap
    noise_amplitude: float = 0.0

    def coefficients(self, gradient: float) -> tuple[float, float, float, float]:
        av = self.a(gradient)
        apv = self.a_prime(gradient)
        if av <= 0.0 or apv >= 0.0:
            raise ValueError(
                f"spec yields invalid slopes a={av}, a_prime={apv} at gradient {gradient}"
            )
        return av, self.b(gradient), apv, self.b_prime(gradient)


# Default maps used by the CLI: rates around 2-4 bpp at mid quality, with
# both models spreading visibly across the gradient range of 8-bit content.
DEFAULT_SPEC = SyntheticSpec(
    a=AffineMap(1.5, 0.02),
    b=AffineMap(2.0, 0.03),
    a_prime=AffineMap(-2.0, -0.05),
    b_prime=AffineMap(4.0, 0.20),
)


class SyntheticBackend(CodecBackend):
    info = CodecInfo(
        name="synthetic",
        deterministic=True,
        min_block_dim=1,
        produces_bitstream=False,
        analytic=True,
    )

    def __init__(self, spec: SyntheticSpec = DEFAULT_SPEC, seed: int = 0):
        self.spec = spec
        self.seed = seed

    def encode(self, block: Block, lam: float) -> EncodeResult:
        if not 0.0 < lam <= 1.0:
            raise ValueError(f"lam {lam} outside (0, 1]")
        a, b, ap, bp = self.spec.coefficients(block.gradient)
        log_lam = math.log(lam)
        rate = max(0.0, a * log_lam + b)
        dist = max(0.0, ap * log_lam + bp)
        if self.spec.noise_amplitude > 0.0:
            rng = np.random.default_rng(
                [self.seed, block.index, int(round(lam * 1e9))]
            )
            eps_rate, eps_dist = rng.uniform(-1.0, 1.0, size=2)
            rate = max(0.0, rate * (1.0 + self.spec.noise_amplitude * eps_rate))
            dist = max(0.0, dist * (1.0 + self.spec.noise_amplitude * eps_dist))
        return EncodeResult(
            payload=b"",
            payload_bits=0,
            rate=rate,
            distortion=dist,
            reconstruction=block.pixels,
        )

    def decode(self, payload: bytes, width: int, height: int, lam: float) -> np.ndarray:
        raise CorruptPayload("synthetic backend produces no decodable payload")
