"""Gradient-based prediction of rate/distortion model coefficients.

Measuring a block's models costs two codec passes.  Within one image the
four model coefficients track the block texture gradient nearly linearly, so
only a sample of blocks is measured; a least-squares line per coefficient
then predicts the models of every unmeasured block from its gradient alone.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .grid import Block, BlockGrid
from .models import (
    BlockRdProfile,
    LogLinearModel,
    ModelKind,
    Provenance,
)

# Predicted slopes are clamped away from zero so that downstream cost and
# rate expressions keep their sign structure even under extrapolation.
SLOPE_EPSILON = 1e-6

COEFFICIENT_TARGETS = ("a", "b", "a_prime", "b_prime")


class InsufficientSamples(ValueError):
    """Fewer than 2 measured profiles; coefficient lines unidentifiable."""


@dataclass(frozen=True)
class CoefficientLine:
    """coefficient = slope * gradient + intercept, for one target."""

    target: str
    slope: float
    intercept: float
    r_squared: float

    def __post_init__(self):
        if self.target not in COEFFICIENT_TARGETS:
            raise ValueError(f"unknown target {self.target!r}")
        if not 0.0 <= self.r_squared <= 1.0:
            raise ValueError(f"r_squared {self.r_squared} outside [0, 1]")

    def at(self, gradient: float) -> float:
        return self.slope * gradient + self.intercept


@dataclass(frozen=True)
class CoefficientLines:
    a: CoefficientLine
    b: CoefficientLine
    a_prime: CoefficientLine
    b_prime: CoefficientLine

    def __iter__(self):
        return iter((self.a, self.b, self.a_prime, self.b_prime))


@dataclass(frozen=True)
class SamplingPlan:
    ratio_denominator: int
    sampled_indices: frozenset[int]


def sample_count(n_blocks: int, ratio_denominator: int) -> int:
    """Number of blocks measured for a 1:k sampling ratio."""
    if n_blocks <= 1:
        return n_blocks
    return max(2, -(-n_blocks // ratio_denominator))


def select_samples(grid: BlockGrid, ratio_denominator: int) -> SamplingPlan:
    """Pick every k-th block of the gradient-sorted order.

    Sorting by gradient stratifies the sample over the texture range, which
    conditions the coefficient regressions.  Ties break by block index; when
    the every-k-th rule yields fewer than the 2 points a line needs, the
    highest-gradient block is added.  Deterministic.
    """
    if ratio_denominator < 1:
        raise ValueError(f"ratio denominator {ratio_denominator} < 1")
    n = len(grid)
    if n == 0:
        raise ValueError("empty grid")

    order = sorted(grid.blocks, key=lambda b: (b.gradient, b.index))
    picked = {b.index for b in order[:: ratio_denominator]}
    want = sample_count(n, ratio_denominator)
    if len(picked) < want:
        picked.add(order[-1].index)
    return SamplingPlan(
        ratio_denominator=ratio_denominator, sampled_indices=frozenset(picked)
    )


def _line_for(target: str, grads: Sequence[float], ys: Sequence[float]) -> CoefficientLine:
    n = len(grads)
    gm = sum(grads) / n
    ym = sum(ys) / n
    sxx = sum((g - gm) ** 2 for g in grads)
    if sxx == 0.0:
        # Flat texture spread: fall back to the mean coefficient.
        return CoefficientLine(target=target, slope=0.0, intercept=ym, r_squared=0.0)
    sxy = sum((g - gm) * (y - ym) for g, y in zip(grads, ys))
    slope = sxy / sxx
    intercept = ym - slope * gm
    ss_tot = sum((y - ym) ** 2 for y in ys)
    ss_res = sum((y - (slope * g + intercept)) ** 2 for g, y in zip(grads, ys))
    if ss_tot == 0.0:
        r2 = 1.0
    else:
        r2 = min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    return CoefficientLine(target=target, slope=slope, intercept=intercept, r_squared=r2)


def fit_coefficient_lines(
    profiles: Iterable[tuple[float, BlockRdProfile]]
) -> CoefficientLines:
    """Least-squares line per coefficient over (gradient, profile) pairs."""
    pairs = list(profiles)
    if len(pairs) < 2:
        raise InsufficientSamples(f"need >= 2 measured profiles, got {len(pairs)}")
    grads = [g for g, _ in pairs]
    columns = {
        "a": [p.rate_model.slope for _, p in pairs],
        "b": [p.rate_model.intercept for _, p in pairs],
        "a_prime": [p.dist_model.slope for _, p in pairs],
        "b_prime": [p.dist_model.intercept for _, p in pairs],
    }
    return CoefficientLines(
        **{t: _line_for(t, grads, columns[t]) for t in COEFFICIENT_TARGETS}
    )


def predict_profile(lines: CoefficientLines, block: Block) -> BlockRdProfile:
    """Evaluate the coefficient lines at a block's gradient.

    The rate slope is clamped to >= SLOPE_EPSILON and the distortion slope
    to <= -SLOPE_EPSILON: extrapolation on extreme gradients can cross zero,
    which would break the allocator's cost and monotonicity structure.
    """
    g = block.gradient
    a = max(SLOPE_EPSILON, lines.a.at(g))
    a_prime = min(-SLOPE_EPSILON, lines.a_prime.at(g))
    return BlockRdProfile(
        block_index=block.index,
        rate_model=LogLinearModel(slope=a, intercept=lines.b.at(g), kind=ModelKind.RATE),
        dist_model=LogLinearModel(
            slope=a_prime, intercept=lines.b_prime.at(g), kind=ModelKind.DISTORTION
        ),
        provenance=Provenance.PREDICTED,
    )


def assemble_profiles(
    grid: BlockGrid,
    measured: Mapping[int, BlockRdProfile],
    lines: CoefficientLines | None,
) -> list[BlockRdProfile]:
    """Full per-block profile list: measured kept as-is, rest predicted.

    A measured profile is never replaced by a prediction.  ``lines`` may be
    None only when every block is measured.
    """
    out: list[BlockRdProfile] = []
    for block in grid.blocks:
        prof = measured.get(block.index)
        if prof is None:
            if lines is None:
                raise InsufficientSamples(
                    f"block {block.index} unmeasured and no coefficient lines"
                )
            prof = predict_profile(lines, block)
        out.append(prof)
    return out
