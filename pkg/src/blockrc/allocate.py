"""Greedy per-block quality allocation against a bitrate target.

Every block starts at lambda_init.  Each iteration evaluates, for every
block that can still move, the distortion increase a single lambda_step
decrement would cost, and applies the cheapest one (ties to the lowest
block index) until the modeled pixel-weighted bitrate drops to the target
or every block is frozen at the lambda floor.

Because a block's next-step cost depends only on its own lambda, a lazy
min-heap re-inserts one stale entry per iteration, giving O(log N) steps.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .models import BlockRdProfile, eval_rate


class StepUnderflow(ValueError):
    """lam - step would not stay positive."""


@dataclass(frozen=True)
class RateControlConfig:
    lambda_init: float
    target_bpp: float
    lambda_step: float = 0.01
    lambda_min: float = 0.05

    def __post_init__(self):
        if not 0.0 < self.lambda_min < self.lambda_init <= 1.0:
            raise ValueError(
                f"need 0 < lambda_min < lambda_init <= 1, got "
                f"{self.lambda_min}, {self.lambda_init}"
            )
        if self.lambda_step <= 0.0:
            raise ValueError(f"lambda_step {self.lambda_step} must be > 0")
        if self.lambda_min < self.lambda_step:
            raise ValueError(
                f"lambda_min {self.lambda_min} < lambda_step {self.lambda_step}"
            )
        if self.target_bpp < 0.0:
            raise ValueError(f"target_bpp {self.target_bpp} < 0")

    @property
    def max_steps(self) -> int:
        """Steps from lambda_init down to the floor, per block."""
        return int(
            math.floor((self.lambda_init - self.lambda_min) / self.lambda_step + 1e-9)
        )

    def lam_at(self, steps: int) -> float:
        return self.lambda_init - steps * self.lambda_step


@dataclass
class AllocationState:
    lambdas: np.ndarray
    rates: np.ndarray
    pixel_counts: np.ndarray
    total_bpp: float
    frozen: np.ndarray
    target_unreachable: bool
    iterations: int
    selections: list[int] = field(default_factory=list, repr=False)


def distortion_cost(profile: BlockRdProfile, lam: float, step: float) -> float:
    """Distortion increase from lowering lam by one step.

    Equals D(lam - step) - D(lam) for the log-linear distortion model; the
    positive quantity the greedy loop minimizes.
    """
    if lam - step <= 0.0:
        raise StepUnderflow(f"lam {lam} - step {step} <= 0")
    a_prime = profile.dist_model.slope
    if a_prime >= 0.0:
        raise ValueError(f"distortion slope {a_prime} must be < 0")
    return -a_prime * math.log(lam / (lam - step))


def allocate(
    profiles: Sequence[BlockRdProfile],
    pixel_counts: Sequence[int],
    cfg: RateControlConfig,
) -> AllocationState:
    n = len(profiles)
    if n == 0:
        raise ValueError("no blocks to allocate")
    px = np.asarray(pixel_counts, dtype=np.int64)
    if px.shape != (n,) or np.any(px <= 0):
        raise ValueError("pixel_counts must be positive and match profiles")

    total_px = float(px.sum())
    steps = np.zeros(n, dtype=np.int64)
    rates = np.array(
        [eval_rate(p.rate_model, cfg.lambda_init) for p in profiles], dtype=np.float64
    )
    weighted_rate = float(np.dot(rates, px))
    total_bpp = weighted_rate / total_px
    frozen = np.zeros(n, dtype=bool)
    max_steps = cfg.max_steps
    step = cfg.lambda_step
    selections: list[int] = []

    def cost_of(i: int) -> float:
        lam = cfg.lam_at(int(steps[i]))
        return -profiles[i].dist_model.slope * math.log(lam / (lam - step))

    # Heap entries are (cost, index, steps-at-push); a mismatch in the steps
    # field marks the entry stale.
    heap: list[tuple[float, int, int]] = []
    if max_steps >= 1:
        for i in range(n):
            heapq.heappush(heap, (cost_of(i), i, 0))
    else:
        frozen[:] = True

    iterations = 0
    while total_bpp > cfg.target_bpp and heap:
        cost, i, at = heapq.heappop(heap)
        if at != steps[i]:
            continue  # stale: this block moved since the entry was pushed
        steps[i] += 1
        iterations += 1
        selections.append(i)
        new_rate = eval_rate(profiles[i].rate_model, cfg.lam_at(int(steps[i])))
        weighted_rate += (new_rate - rates[i]) * px[i]
        rates[i] = new_rate
        total_bpp = weighted_rate / total_px
        if steps[i] < max_steps:
            heapq.heappush(heap, (cost_of(i), i, int(steps[i])))
        else:
            frozen[i] = True

    lambdas = np.array([cfg.lam_at(int(s)) for s in steps], dtype=np.float64)
    return AllocationState(
        lambdas=lambdas,
        rates=rates,
        pixel_counts=px,
        total_bpp=total_bpp,
        frozen=frozen,
        target_unreachable=total_bpp > cfg.target_bpp,
        iterations=iterations,
        selections=selections,
    )


def modeled_totals(
    state: AllocationState, profiles: Sequence[BlockRdProfile]
) -> tuple[float, float]:
    """Pixel-weighted mean rate and mean distortion at the state's lambdas."""
    from .models import eval_distortion

    px = state.pixel_counts.astype(np.float64)
    total_px = px.sum()
    rate = sum(
        eval_rate(p.rate_model, lam) * w
        for p, lam, w in zip(profiles, state.lambdas, px)
    )
    dist = sum(
        eval_distortion(p.dist_model, lam) * w
        for p, lam, w in zip(profiles, state.lambdas, px)
    )
    return rate / total_px, dist / total_px
