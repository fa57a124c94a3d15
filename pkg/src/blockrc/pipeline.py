"""End-to-end rate-control runs, measurement, and CSV reporting.

A control run is: select sample blocks -> two coding passes per sampled
block -> fit per-block models -> regress coefficient lines on gradient ->
predict models for the remaining blocks -> greedy allocation -> final coding
pass per block at its allocated (fixed-point-quantized) quality.

Codec-call accounting is exact: 2 * sampled + N calls for a control run,
plus N separately-reported calls when the target is derived from a
preliminary full pass.  Wall time covers the control phase only (fitting,
regression, allocation); CSV outputs carry no timing so repeated runs are
byte-identical.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .allocate import AllocationState, RateControlConfig, allocate
from .codec import CallCountingBackend, CodecBackend, psnr
from .container import BlockRecord, quantize_lambda, write_container
from .grid import BlockGrid, Image, partition, to_luma
from .models import (
    BlockRdProfile,
    CodingSample,
    ModelKind,
    NonMonotonicSamples,
    Provenance,
    fit_least_squares,
    fit_power,
    fit_rmse,
    fit_two_point,
)
from .predict import (
    CoefficientLines,
    assemble_profiles,
    fit_coefficient_lines,
    select_samples,
)

AUTO_TARGET_FACTOR = 0.95


class ModelingError(ValueError):
    """Too few usable measured blocks to predict the remaining ones."""


@dataclass(frozen=True)
class RunReport:
    target_bpp: float
    achieved_model_bpp: float
    achieved_actual_bpp: float
    delta_r_percent: float
    psnr_db: float
    wall_time_s: float
    codec_calls: int
    codec_calls_auto: int
    sampling_ratio: int
    lambda_init: float
    sampled_count: int
    block_count: int
    target_unreachable: bool


@dataclass(frozen=True)
class ControlResult:
    report: RunReport
    grid: BlockGrid
    profiles: list[BlockRdProfile]
    lines: CoefficientLines | None
    state: AllocationState
    final_lambdas: list[float]
    final_rates: list[float]
    final_distortions: list[float]
    final_payloads: list[tuple[bytes, int]]
    skipped_samples: tuple[int, ...]


def _delta_r_percent(actual: float, target: float) -> float:
    if target == 0.0:
        return 0.0 if actual == 0.0 else float("inf")
    return 100.0 * abs(actual - target) / target


def _actual_bpp(backend: CodecBackend, rates, bits, pixel_counts) -> float:
    """Pixel-weighted achieved bpp; exact bit count when payloads exist."""
    total_px = float(sum(pixel_counts))
    if backend.info.produces_bitstream:
        return float(sum(bits)) / total_px
    return float(sum(r * p for r, p in zip(rates, pixel_counts))) / total_px


def measure_blocks(
    backend: CodecBackend, grid: BlockGrid, indices, lam_pair: tuple[float, float]
) -> tuple[dict[int, BlockRdProfile], list[int]]:
    """Two coding passes per block; blocks whose fits violate the sign
    conventions (flat content, codec noise) are skipped, not fatal."""
    measured: dict[int, BlockRdProfile] = {}
    skipped: list[int] = []
    for idx in sorted(indices):
        block = grid.blocks[idx]
        r1 = backend.encode(block, lam_pair[0])
        r2 = backend.encode(block, lam_pair[1])
        s1 = CodingSample(lam_pair[0], r1.rate, r1.distortion)
        s2 = CodingSample(lam_pair[1], r2.rate, r2.distortion)
        try:
            rate_model = fit_two_point(s1, s2, ModelKind.RATE)
            dist_model = fit_two_point(s1, s2, ModelKind.DISTORTION)
        except NonMonotonicSamples:
            skipped.append(idx)
            continue
        measured[idx] = BlockRdProfile(
            block_index=idx,
            rate_model=rate_model,
            dist_model=dist_model,
            provenance=Provenance.MEASURED,
        )
    return measured, skipped


def run_control(
    image: Image,
    backend: CodecBackend,
    *,
    block_size: int = 256,
    lambda_init: float = 0.6,
    lambda_step: float = 0.01,
    lambda_min: float = 0.05,
    ratio: int = 1,
    target_bpp: float | None = None,
) -> ControlResult:
    """Full rate-control pipeline on one image.

    target_bpp None means auto: a preliminary pass encodes every block at
    lambda_init and the target is AUTO_TARGET_FACTOR times the measured bpp.
    """
    luma = to_luma(image)
    grid = partition(luma, block_size)
    n = len(grid)
    counting = CallCountingBackend(backend)
    pixel_counts = grid.pixel_counts()

    codec_calls_auto = 0
    if target_bpp is None:
        pre = [counting.encode(b, lambda_init) for b in grid.blocks]
        codec_calls_auto = counting.encode_calls
        measured_bpp = _actual_bpp(
            backend, [r.rate for r in pre], [r.payload_bits for r in pre], pixel_counts
        )
        target_bpp = AUTO_TARGET_FACTOR * measured_bpp

    t0 = time.perf_counter()
    plan = select_samples(grid, ratio)
    lam_pair = (lambda_init, lambda_init / 2.0)
    measured, skipped = measure_blocks(counting, grid, plan.sampled_indices, lam_pair)

    lines: CoefficientLines | None = None
    if len(measured) >= 2:
        lines = fit_coefficient_lines(
            [(grid.blocks[i].gradient, p) for i, p in sorted(measured.items())]
        )
    elif len(measured) < n:
        raise ModelingError(
            f"only {len(measured)} of {len(plan.sampled_indices)} sampled blocks "
            "produced usable models; need at least 2"
        )
    profiles = assemble_profiles(grid, measured, lines)

    cfg = RateControlConfig(
        lambda_init=lambda_init,
        target_bpp=target_bpp,
        lambda_step=lambda_step,
        lambda_min=lambda_min,
    )
    state = allocate(profiles, pixel_counts, cfg)
    wall_time = time.perf_counter() - t0

    final_lambdas = [quantize_lambda(l) for l in state.lambdas]
    finals = [counting.encode(b, lam) for b, lam in zip(grid.blocks, final_lambdas)]

    actual = _actual_bpp(
        backend,
        [r.rate for r in finals],
        [r.payload_bits for r in finals],
        pixel_counts,
    )
    mse = float(
        sum(r.distortion * p for r, p in zip(finals, pixel_counts))
        / sum(pixel_counts)
    )
    report = RunReport(
        target_bpp=target_bpp,
        achieved_model_bpp=state.total_bpp,
        achieved_actual_bpp=actual,
        delta_r_percent=_delta_r_percent(actual, target_bpp),
        psnr_db=psnr(mse),
        wall_time_s=wall_time,
        codec_calls=counting.encode_calls - codec_calls_auto,
        codec_calls_auto=codec_calls_auto,
        sampling_ratio=ratio,
        lambda_init=lambda_init,
        sampled_count=len(plan.sampled_indices),
        block_count=n,
        target_unreachable=state.target_unreachable,
    )
    return ControlResult(
        report=report,
        grid=grid,
        profiles=profiles,
        lines=lines,
        state=state,
        final_lambdas=final_lambdas,
        final_rates=[r.rate for r in finals],
        final_distortions=[r.distortion for r in finals],
        final_payloads=[(r.payload, r.payload_bits) for r in finals],
        skipped_samples=tuple(skipped),
    )


def write_bitstream(path, result: ControlResult) -> None:
    grid = result.grid
    records = [
        BlockRecord(lam=lam, payload_bits=bits, payload=payload)
        for lam, (payload, bits) in zip(result.final_lambdas, result.final_payloads)
    ]
    write_container(
        path, grid.image_width, grid.image_height, grid.block_size, records
    )


def decode_bitstream(container, backend: CodecBackend) -> np.ndarray:
    """Reassemble the full luma image from a parsed container."""
    canvas = np.zeros((container.image_height, container.image_width), dtype=np.uint8)
    bs = container.block_size
    idx = 0
    for y0 in range(0, container.image_height, bs):
        bh = min(bs, container.image_height - y0)
        for x0 in range(0, container.image_width, bs):
            bw = min(bs, container.image_width - x0)
            rec = container.records[idx]
            canvas[y0 : y0 + bh, x0 : x0 + bw] = backend.decode(
                rec.payload, bw, bh, rec.lam
            )
            idx += 1
    return canvas


@dataclass(frozen=True)
class FitRow:
    block_index: int
    gradient: float
    model_kind: str
    slope_or_coeff: float
    intercept_or_exponent: float
    rmse: float


def run_fit(
    image: Image,
    backend: CodecBackend,
    *,
    block_size: int = 256,
    lambdas: Sequence[float],
) -> list[FitRow]:
    """Per-block model fits over a quality grid; three rows per block:
    log-linear rate, log-linear distortion, power-law distortion."""
    if len(lambdas) < 2:
        raise ValueError("need at least 2 quality points")
    luma = to_luma(image)
    grid = partition(luma, block_size)
    rows: list[FitRow] = []
    for block in grid.blocks:
        results = [backend.encode(block, lam) for lam in lambdas]
        samples = [
            CodingSample(lam, r.rate, r.distortion)
            for lam, r in zip(lambdas, results)
        ]
        rate_m = fit_least_squares(samples, ModelKind.RATE)
        dist_m = fit_least_squares(samples, ModelKind.DISTORTION)
        power_m = fit_power(samples)
        rows.append(
            FitRow(block.index, block.gradient, "rate_loglinear",
                   rate_m.slope, rate_m.intercept, fit_rmse(rate_m, samples))
        )
        rows.append(
            FitRow(block.index, block.gradient, "dist_loglinear",
                   dist_m.slope, dist_m.intercept, fit_rmse(dist_m, samples))
        )
        rows.append(
            FitRow(block.index, block.gradient, "dist_power",
                   power_m.coeff, power_m.exponent, fit_rmse(power_m, samples))
        )
    return rows


@dataclass(frozen=True)
class SweepRow:
    image: str
    lambda_init: float
    ratio: int
    report: RunReport | None
    error: str = ""


def run_sweep(
    images: Sequence[tuple[str, Image]],
    backend: CodecBackend,
    *,
    block_size: int = 256,
    lambda_inits: Sequence[float],
    ratios: Sequence[int],
    lambda_step: float = 0.01,
    lambda_min: float = 0.05,
) -> list[SweepRow]:
    """One control run per (image, lambda_init, ratio) cell, auto target.
    Per-image failures become error rows; the sweep continues."""
    if not lambda_inits or not ratios:
        raise ValueError("lambda_inits and ratios must be nonempty")
    rows: list[SweepRow] = []
    for lam_init in lambda_inits:
        for ratio in ratios:
            for name, image in images:
                try:
                    res = run_control(
                        image,
                        backend,
                        block_size=block_size,
                        lambda_init=lam_init,
                        lambda_step=lambda_step,
                        lambda_min=lambda_min,
                        ratio=ratio,
                        target_bpp=None,
                    )
                    rows.append(SweepRow(name, lam_init, ratio, res.report))
                except (ValueError, OSError) as exc:
                    rows.append(SweepRow(name, lam_init, ratio, None, str(exc)))
    return rows


# ---------------------------------------------------------------------------
# CSV emission.  Floats use 6 significant digits, "." decimal separator.
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


def _csv_lines(meta: str, header: Sequence[str], rows) -> list[str]:
    lines = [f"# blockrc {meta}", ",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    return lines


def write_csv(path, meta: str, header: Sequence[str], rows) -> None:
    text = "\n".join(_csv_lines(meta, header, rows)) + "\n"
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(text)


FIT_HEADER = ("block_index", "gradient", "model_kind",
              "slope_or_coeff", "intercept_or_exponent", "rmse")


def write_fit_csv(path, meta: str, rows: Sequence[FitRow]) -> None:
    write_csv(
        path, meta, FIT_HEADER,
        [
            (r.block_index, r.gradient, r.model_kind,
             r.slope_or_coeff, r.intercept_or_exponent, r.rmse)
            for r in rows
        ],
    )


CONTROL_HEADER = ("block_index", "gradient", "lambda_final",
                  "modeled_bpp", "actual_bpp", "actual_mse", "status")


def write_control_csv(path, meta: str, result: ControlResult) -> None:
    status = "target_unreachable" if result.report.target_unreachable else "ok"
    rows = [
        (b.index, b.gradient, result.final_lambdas[b.index],
         result.state.rates[b.index], result.final_rates[b.index],
         result.final_distortions[b.index], status)
        for b in result.grid.blocks
    ]
    write_csv(path, meta, CONTROL_HEADER, rows)


LINES_HEADER = ("target", "slope", "intercept", "r_squared")


def write_lines_csv(path, meta: str, lines: CoefficientLines) -> None:
    write_csv(
        path, meta, LINES_HEADER,
        [(ln.target, ln.slope, ln.intercept, ln.r_squared) for ln in lines],
    )


SWEEP_HEADER = ("row_type", "image", "lambda_init", "ratio", "target_bpp",
                "model_bpp", "actual_bpp", "delta_r_percent", "psnr_db",
                "wall_time_s", "codec_calls", "codec_calls_auto", "error")


def write_sweep_csv(path, meta: str, rows: Sequence[SweepRow]) -> None:
    out = []
    for r in rows:
        if r.report is None:
            out.append(("run", r.image, r.lambda_init, r.ratio,
                        "", "", "", "", "", "", "", "", r.error))
        else:
            rep = r.report
            out.append(("run", r.image, r.lambda_init, r.ratio,
                        rep.target_bpp, rep.achieved_model_bpp,
                        rep.achieved_actual_bpp, rep.delta_r_percent,
                        rep.psnr_db, rep.wall_time_s, rep.codec_calls,
                        rep.codec_calls_auto, ""))
    for lam_init in sorted({r.lambda_init for r in rows}):
        for ratio in sorted({r.ratio for r in rows}):
            reps = [
                r.report for r in rows
                if r.lambda_init == lam_init and r.ratio == ratio and r.report
            ]
            if not reps:
                continue
            k = len(reps)
            out.append((
                "mean", f"{k} images", lam_init, ratio, "", "", "",
                sum(r.delta_r_percent for r in reps) / k,
                "",
                sum(r.wall_time_s for r in reps) / k,
                sum(r.codec_calls for r in reps) / k,
                sum(r.codec_calls_auto for r in reps) / k,
                "",
            ))
    write_csv(path, meta, SWEEP_HEADER, out)
