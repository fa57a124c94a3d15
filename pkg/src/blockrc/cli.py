"""Command-line interface: fit, control, sweep, decode.

Exit codes: 0 success, 2 usage error, 3 target unreachable, 4 I/O or
data/format error.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from . import __version__
from .codec import CorruptPayload, get_backend, psnr
from .container import ContainerError, read_container
from .grid import ImageFormatError, load_image, to_luma, write_pgm
from .models import DegenerateSamples, NonMonotonicSamples, NonPositiveDistortion
from .pipeline import (
    ModelingError,
    decode_bitstream,
    run_control,
    run_fit,
    run_sweep,
    write_bitstream,
    write_control_csv,
    write_fit_csv,
    write_lines_csv,
    write_sweep_csv,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_UNREACHABLE = 3
EXIT_DATA = 4


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--backend", choices=("synthetic", "dct"), default="dct")
    p.add_argument("--block-size", type=int, default=256)
    p.add_argument("--seed", type=int, default=0, help="synthetic noise seed")
    p.add_argument("--noise", type=float, default=0.0,
                   help="synthetic fractional noise amplitude")
    p.add_argument("--out", type=Path, required=True)


def _add_control_like(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lambda-step", type=float, default=0.01)
    p.add_argument("--lambda-min", type=float, default=0.05)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blockrc",
        description="Block-level rate control with pluggable codec backends",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="per-block model fits over a quality grid")
    p_fit.add_argument("image", type=Path)
    p_fit.add_argument("--lambdas", type=str, default="0.9,0.75,0.6,0.45,0.3",
                       help="comma-separated quality points (>= 2)")
    _add_common(p_fit)

    p_ctl = sub.add_parser("control", help="rate-control one image to a target")
    p_ctl.add_argument("image", type=Path)
    p_ctl.add_argument("--lambda-init", type=float, default=0.6)
    p_ctl.add_argument("--ratio", type=int, default=1, help="sample 1 in K blocks")
    group = p_ctl.add_mutually_exclusive_group(required=True)
    group.add_argument("--target-bpp", type=float)
    group.add_argument("--auto-target", action="store_true",
                       help="target 0.95x the bpp measured at lambda-init")
    p_ctl.add_argument("--bitstream", type=Path,
                       help="container output path (default: OUT with .brc suffix)")
    p_ctl.add_argument("--lines-out", type=Path,
                       help="also write the gradient/coefficient lines as CSV")
    _add_control_like(p_ctl)
    _add_common(p_ctl)

    p_sweep = sub.add_parser("sweep", help="grid of control runs over images")
    p_sweep.add_argument("path", type=Path, help="image file or directory")
    p_sweep.add_argument("--lambda-inits", type=str, default="0.3,0.6,0.9")
    p_sweep.add_argument("--ratios", type=str, default="1,2,3")
    _add_control_like(p_sweep)
    _add_common(p_sweep)

    p_dec = sub.add_parser("decode", help="decode a container to PGM")
    p_dec.add_argument("bitstream", type=Path)
    p_dec.add_argument("--backend", choices=("synthetic", "dct"), default="dct")
    p_dec.add_argument("--reference", type=Path,
                       help="optional image to report PSNR against")
    p_dec.add_argument("--out", type=Path, required=True)
    return parser


def _meta(args: argparse.Namespace) -> str:
    skip = {"command"}
    flags = " ".join(
        f"{k}={v}" for k, v in sorted(vars(args).items()) if k not in skip
    )
    return f"{__version__} | {args.command} {flags}"


def _parse_floats(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad float list {text!r}")


def _parse_ints(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad int list {text!r}")


def _cmd_fit(args, parser) -> int:
    lambdas = _parse_floats(args.lambdas)
    if len(lambdas) < 2:
        parser.error("--lambdas needs at least 2 values")
    backend = get_backend(args.backend, seed=args.seed, spec=_spec(args))
    image = load_image(args.image)
    rows = run_fit(image, backend, block_size=args.block_size, lambdas=lambdas)
    write_fit_csv(args.out, _meta(args), rows)
    print(f"wrote {len(rows)} fit rows to {args.out}")
    return EXIT_OK


def _spec(args):
    noise = getattr(args, "noise", 0.0)
    if args.backend != "synthetic" or noise <= 0.0:
        return None
    from dataclasses import replace

    from .codec import DEFAULT_SPEC

    return replace(DEFAULT_SPEC, noise_amplitude=noise)


def _cmd_control(args, parser) -> int:
    backend = get_backend(args.backend, seed=args.seed, spec=_spec(args))
    image = load_image(args.image)
    result = run_control(
        image,
        backend,
        block_size=args.block_size,
        lambda_init=args.lambda_init,
        lambda_step=args.lambda_step,
        lambda_min=args.lambda_min,
        ratio=args.ratio,
        target_bpp=None if args.auto_target else args.target_bpp,
    )
    write_control_csv(args.out, _meta(args), result)
    bitstream = args.bitstream or args.out.with_suffix(".brc")
    write_bitstream(bitstream, result)
    if args.lines_out and result.lines is not None:
        write_lines_csv(args.lines_out, _meta(args), result.lines)

    rep = result.report
    for key in (
        "target_bpp", "achieved_model_bpp", "achieved_actual_bpp",
        "delta_r_percent", "psnr_db", "wall_time_s", "codec_calls",
        "codec_calls_auto", "sampled_count", "block_count",
    ):
        print(f"{key}={getattr(rep, key):.6g}"
              if isinstance(getattr(rep, key), float)
              else f"{key}={getattr(rep, key)}")
    if result.skipped_samples:
        print(f"skipped_samples={','.join(map(str, result.skipped_samples))}")
    if rep.target_unreachable:
        print("target unreachable: best-effort allocation written", file=sys.stderr)
        return EXIT_UNREACHABLE
    return EXIT_OK


def _cmd_sweep(args, parser) -> int:
    lambda_inits = _parse_floats(args.lambda_inits)
    ratios = _parse_ints(args.ratios)
    if not lambda_inits or not ratios:
        parser.error("--lambda-inits and --ratios must be nonempty")
    backend = get_backend(args.backend, seed=args.seed, spec=_spec(args))
    if args.path.is_dir():
        paths = sorted(
            p for p in args.path.iterdir() if p.suffix.lower() in (".pgm", ".ppm")
        )
    else:
        paths = [args.path]
    images = [(p.name, load_image(p)) for p in paths]
    rows = run_sweep(
        images,
        backend,
        block_size=args.block_size,
        lambda_inits=lambda_inits,
        ratios=ratios,
        lambda_step=args.lambda_step,
        lambda_min=args.lambda_min,
    )
    write_sweep_csv(args.out, _meta(args), rows)
    failures = sum(1 for r in rows if r.report is None)
    print(f"wrote {len(rows)} sweep rows to {args.out} ({failures} failures)")
    return EXIT_OK


def _cmd_decode(args, parser) -> int:
    container = read_container(args.bitstream)
    backend = get_backend(args.backend)
    decoded = decode_bitstream(container, backend)
    write_pgm(args.out, decoded)
    print(f"decoded {container.image_width}x{container.image_height} to {args.out}")
    if args.reference:
        ref = to_luma(load_image(args.reference))
        if ref.data.shape != decoded.shape:
            print("reference dimensions differ; PSNR skipped", file=sys.stderr)
        else:
            err = ref.data.astype(float) - decoded.astype(float)
            mse = float((err * err).mean())
            value = psnr(mse)
            print("psnr_db=inf" if math.isinf(value) else f"psnr_db={value:.6g}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = {
        "fit": _cmd_fit,
        "control": _cmd_control,
        "sweep": _cmd_sweep,
        "decode": _cmd_decode,
    }[args.command]
    try:
        return handler(args, parser)
    except (
        ImageFormatError,
        ContainerError,
        CorruptPayload,
        ModelingError,
        DegenerateSamples,
        NonMonotonicSamples,
        NonPositiveDistortion,
        OSError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
