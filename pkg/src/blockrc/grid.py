"""Image loading, block partitioning, and the per-block texture gradient.

Images are 8-bit grayscale or RGB held as numpy arrays.  An image is tiled
into non-overlapping blocks in raster order; edge blocks keep their natural
(smaller) size.  Each block carries an average-gradient texture measure used
downstream to predict rate/distortion model coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# BT.601 luma weights for RGB -> gray conversion.
_LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])


class ImageFormatError(ValueError):
    """File is not a well-formed binary PGM/PPM."""


class UnsupportedDepth(ImageFormatError):
    """Image maxval is not 255 (only 8-bit samples are supported)."""


@dataclass(frozen=True)
class Image:
    """8-bit image; ``data`` has shape (h, w) for gray or (h, w, 3) for RGB."""

    data: np.ndarray

    def __post_init__(self):
        if self.data.dtype != np.uint8:
            raise ValueError("image data must be uint8")
        if self.data.ndim == 2:
            pass
        elif self.data.ndim == 3 and self.data.shape[2] == 3:
            pass
        else:
            raise ValueError(f"bad image shape {self.data.shape}")
        if self.data.shape[0] < 1 or self.data.shape[1] < 1:
            raise ValueError("image dimensions must be >= 1")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return 1 if self.data.ndim == 2 else 3


@dataclass(frozen=True)
class Block:
    """One rectangular luma region of the partition grid.

    ``gradient`` is the average-gradient texture measure: the square root of
    the sum of squared horizontal and vertical neighbor differences, divided
    by the block's pixel count.  Boundary positions with no right/down
    neighbor contribute no difference terms.
    """

    index: int
    origin_x: int
    origin_y: int
    width: int
    height: int
    pixels: np.ndarray = field(repr=False)
    gradient: float

    @property
    def pixel_count(self) -> int:
        return self.width * self.height

    @property
    def degenerate(self) -> bool:
        """True for 1-pixel-thin blocks, which cannot support one of the
        two difference directions and get gradient 0."""
        return self.width < 2 or self.height < 2


@dataclass(frozen=True)
class BlockGrid:
    blocks: tuple[Block, ...]
    image_width: int
    image_height: int
    block_size: int

    def __len__(self) -> int:
        return len(self.blocks)

    def pixel_counts(self) -> np.ndarray:
        return np.array([b.pixel_count for b in self.blocks], dtype=np.int64)


def _read_header_tokens(data: bytes, count: int, start: int) -> tuple[list[int], int]:
    """Read `count` whitespace-separated integer tokens, skipping # comments."""
    tokens: list[int] = []
    i = start
    n = len(data)
    while len(tokens) < count:
        while i < n and data[i : i + 1].isspace():
            i += 1
        if i < n and data[i] == ord("#"):
            while i < n and data[i] != ord("\n"):
                i += 1
            continue
        j = i
        while j < n and not data[j : j + 1].isspace():
            j += 1
        if j == i:
            raise ImageFormatError("truncated header")
        tok = data[i:j]
        if not tok.isdigit():
            raise ImageFormatError(f"non-numeric header token {tok!r}")
        tokens.append(int(tok))
        i = j
    return tokens, i


def load_image(path) -> Image:
    """Load a binary PGM (P5) or PPM (P6) file with maxval 255."""
    with open(path, "rb") as fh:
        data = fh.read()

    if data[:2] == b"P5":
        channels = 1
    elif data[:2] == b"P6":
        channels = 3
    else:
        raise ImageFormatError(f"unrecognized magic {data[:2]!r}")

    (width, height, maxval), pos = _read_header_tokens(data, 3, 2)
    if maxval != 255:
        raise UnsupportedDepth(f"maxval {maxval} unsupported (need 255)")
    if width < 1 or height < 1:
        raise ImageFormatError("image dimensions must be >= 1")

    # Exactly one whitespace byte separates the header from the samples.
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise ImageFormatError("missing whitespace after maxval")
    pos += 1

    expected = width * height * channels
    raw = data[pos:]
    if len(raw) != expected:
        raise ImageFormatError(
            f"payload is {len(raw)} bytes, expected {expected}"
        )
    arr = np.frombuffer(raw, dtype=np.uint8)
    shape = (height, width) if channels == 1 else (height, width, 3)
    return Image(data=arr.reshape(shape).copy())


def write_pgm(path, gray: np.ndarray) -> None:
    """Write a 2-D uint8 array as binary PGM (P5, maxval 255)."""
    if gray.ndim != 2 or gray.dtype != np.uint8:
        raise ValueError("write_pgm expects a 2-D uint8 array")
    h, w = gray.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(gray.tobytes())


def to_luma(img: Image) -> Image:
    """BT.601 luma conversion; identity for grayscale input."""
    if img.channels == 1:
        return img
    y = img.data.astype(np.float64) @ _LUMA_WEIGHTS
    y = np.clip(np.floor(y + 0.5), 0, 255)
    return Image(data=y.astype(np.uint8))


def gradient_of(pixels: np.ndarray) -> float:
    """Average gradient of a 2-D pixel array; 0 for thin (<2) dimensions."""
    h, w = pixels.shape
    if h < 2 or w < 2:
        return 0.0
    a = pixels.astype(np.int64)
    dh = a[:, :-1] - a[:, 1:]
    dv = a[:-1, :] - a[1:, :]
    total = float(np.sum(dh * dh) + np.sum(dv * dv))
    return math.sqrt(total) / (h * w)


def average_gradient(block: Block) -> float:
    return gradient_of(block.pixels)


def partition(img: Image, block_size: int) -> BlockGrid:
    """Tile a grayscale image into non-overlapping blocks, raster order.

    Edge blocks are truncated to the image bounds, never padded.  Raises
    ValueError for block_size < 8 (too small for the codec backends).
    """
    if block_size < 8:
        raise ValueError(f"block_size {block_size} < 8")
    if img.channels != 1:
        raise ValueError("partition expects a grayscale image (use to_luma)")

    h, w = img.data.shape
    blocks: list[Block] = []
    index = 0
    for y0 in range(0, h, block_size):
        bh = min(block_size, h - y0)
        for x0 in range(0, w, block_size):
            bw = min(block_size, w - x0)
            px = img.data[y0 : y0 + bh, x0 : x0 + bw].copy()
            blocks.append(
                Block(
                    index=index,
                    origin_x=x0,
                    origin_y=y0,
                    width=bw,
                    height=bh,
                    pixels=px,
                    gradient=gradient_of(px),
                )
            )
            index += 1
    return BlockGrid(
        blocks=tuple(blocks), image_width=w, image_height=h, block_size=block_size
    )
