"""Block-level rate control for image compression.

Fits per-block rate and distortion models against a normalized quality
factor, predicts models for unsampled blocks from their texture gradient,
and greedily allocates per-block quality to hit a bitrate target with
minimal total distortion.  Codec backends are pluggable; a synthetic
analytic backend makes every stage oracle-checkable and a DCT/range-coder
backend produces real bits on real images.
"""

from .allocate import (
    AllocationState,
    RateControlConfig,
    StepUnderflow,
    allocate,
    distortion_cost,
    modeled_totals,
)
from .grid import (
    Block,
    BlockGrid,
    Image,
    ImageFormatError,
    UnsupportedDepth,
    average_gradient,
    load_image,
    partition,
    to_luma,
    write_pgm,
)
from .models import (
    BlockRdProfile,
    CodingSample,
    DegenerateSamples,
    LogLinearModel,
    ModelKind,
    NonMonotonicSamples,
    NonPositiveDistortion,
    PowerModel,
    Provenance,
    eval_distortion,
    eval_rate,
    fit_least_squares,
    fit_line,
    fit_power,
    fit_rmse,
    fit_two_point,
)
from .predict import (
    CoefficientLine,
    CoefficientLines,
    InsufficientSamples,
    SamplingPlan,
    assemble_profiles,
    fit_coefficient_lines,
    predict_profile,
    select_samples,
)

__version__ = "0.1.0"
