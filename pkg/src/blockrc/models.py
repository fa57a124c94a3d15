"""Per-block rate and distortion models over the normalized quality factor.

Both the rate and distortion models are linear in ln(lam) with lam in (0, 1]:
rate slopes are positive (more bits at higher quality), distortion slopes are
negative.  A power-law distortion model is kept alongside as a fit-quality
baseline; the allocator itself only ever uses the log-linear forms.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence, Union


class DegenerateSamples(ValueError):
    """Samples cannot identify a line (too few, or all lam equal)."""


class NonMonotonicSamples(ValueError):
    """Fitted slope violates the model-kind sign convention; usually codec
    noise exceeding the lam spacing."""


class NonPositiveDistortion(ValueError):
    """Power-law fit needs strictly positive distortions."""


class ModelKind(enum.Enum):
    RATE = "rate"
    DISTORTION = "distortion"


class Provenance(enum.Enum):
    MEASURED = "measured"
    PREDICTED = "predicted"


@dataclass(frozen=True)
class CodingSample:
    """One (lam, rate, distortion) measurement from a codec backend."""

    lam: float
    rate: float
    distortion: float

    def __post_init__(self):
        if not 0.0 < self.lam <= 1.0:
            raise ValueError(f"lam {self.lam} outside (0, 1]")
        if self.rate < 0.0:
            raise ValueError(f"negative rate {self.rate}")
        if self.distortion < 0.0:
            raise ValueError(f"negative distortion {self.distortion}")


@dataclass(frozen=True)
class LogLinearModel:
    """y = slope * ln(lam) + intercept, evaluated with a clamp at zero."""

    slope: float
    intercept: float
    kind: ModelKind


@dataclass(frozen=True)
class PowerModel:
    """distortion = coeff * lam ** exponent."""

    coeff: float
    exponent: float


@dataclass(frozen=True)
class BlockRdProfile:
    block_index: int
    rate_model: LogLinearModel
    dist_model: LogLinearModel
    provenance: Provenance

    def __post_init__(self):
        if self.rate_model.kind is not ModelKind.RATE:
            raise ValueError("rate_model has wrong kind")
        if self.dist_model.kind is not ModelKind.DISTORTION:
            raise ValueError("dist_model has wrong kind")


Model = Union[LogLinearModel, PowerModel]


def fit_line(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float]:
    """Ordinary least squares of y on x; returns (slope, intercept).

    The shared primitive behind every fit in this module and the coefficient
    predictor.  Raises DegenerateSamples for < 2 points or zero x variance.
    """
    n = len(xs)
    if n < 2 or n != len(ys):
        raise DegenerateSamples(f"need >= 2 paired points, got {n}")
    xm = math.fsum(xs) / n
    ym = math.fsum(ys) / n
    sxx = math.fsum((x - xm) ** 2 for x in xs)
    if sxx == 0.0:
        raise DegenerateSamples("zero variance in x")
    sxy = math.fsum((x - xm) * (y - ym) for x, y in zip(xs, ys))
    slope = sxy / sxx
    return slope, ym - slope * xm


def _dependent(sample: CodingSample, kind: ModelKind) -> float:
    return sample.rate if kind is ModelKind.RATE else sample.distortion


def _check_sign(slope: float, kind: ModelKind) -> None:
    if kind is ModelKind.RATE and slope <= 0.0:
        raise NonMonotonicSamples(f"rate slope {slope} must be > 0")
    if kind is ModelKind.DISTORTION and slope >= 0.0:
        raise NonMonotonicSamples(f"distortion slope {slope} must be < 0")


def fit_two_point(
    s1: CodingSample, s2: CodingSample, kind: ModelKind
) -> LogLinearModel:
    """Exact log-linear model through two samples."""
    if s1.lam == s2.lam:
        raise DegenerateSamples(f"both samples at lam={s1.lam}")
    x1, x2 = math.log(s1.lam), math.log(s2.lam)
    y1, y2 = _dependent(s1, kind), _dependent(s2, kind)
    slope = (y1 - y2) / (x1 - x2)
    _check_sign(slope, kind)
    return LogLinearModel(slope=slope, intercept=y1 - slope * x1, kind=kind)


def fit_least_squares(
    samples: Sequence[CodingSample], kind: ModelKind
) -> LogLinearModel:
    """Least-squares log-linear fit; equals fit_two_point on 2 points."""
    xs = [math.log(s.lam) for s in samples]
    ys = [_dependent(s, kind) for s in samples]
    slope, intercept = fit_line(xs, ys)
    _check_sign(slope, kind)
    return LogLinearModel(slope=slope, intercept=intercept, kind=kind)


def fit_power(samples: Sequence[CodingSample]) -> PowerModel:
    """Power-law distortion fit: least squares of ln(D) on ln(lam)."""
    for s in samples:
        if s.distortion <= 0.0:
            raise NonPositiveDistortion(f"distortion {s.distortion} at lam={s.lam}")
    xs = [math.log(s.lam) for s in samples]
    ys = [math.log(s.distortion) for s in samples]
    slope, intercept = fit_line(xs, ys)
    return PowerModel(coeff=math.exp(intercept), exponent=slope)


def _check_lam(lam: float) -> None:
    if not 0.0 < lam <= 1.0:
        raise ValueError(f"lam {lam} outside (0, 1]")


def eval_rate(m: LogLinearModel, lam: float) -> float:
    """Modeled bits per pixel at lam, clamped at zero."""
    if m.kind is not ModelKind.RATE:
        raise ValueError("eval_rate needs a RATE model")
    _check_lam(lam)
    return max(0.0, m.slope * math.log(lam) + m.intercept)


def eval_distortion(m: LogLinearModel, lam: float) -> float:
    """Modeled MSE at lam, clamped at zero."""
    if m.kind is not ModelKind.DISTORTION:
        raise ValueError("eval_distortion needs a DISTORTION model")
    _check_lam(lam)
    return max(0.0, m.slope * math.log(lam) + m.intercept)


def predict(model: Model, lam: float) -> float:
    """Evaluate any model at lam (distortion for PowerModel)."""
    if isinstance(model, PowerModel):
        _check_lam(lam)
        return model.coeff * lam**model.exponent
    if model.kind is ModelKind.RATE:
        return eval_rate(model, lam)
    return eval_distortion(model, lam)


def fit_rmse(model: Model, samples: Sequence[CodingSample]) -> float:
    """Root-mean-square error of a model against its samples."""
    if not samples:
        raise ValueError("need at least one sample")
    kind = model.kind if isinstance(model, LogLinearModel) else ModelKind.DISTORTION
    err = [predict(model, s.lam) - _dependent(s, kind) for s in samples]
    return math.sqrt(math.fsum(e * e for e in err) / len(err))
