"""Grayscale image containers, PGM I/O, integral images, and ROI strips.

Images hold float64 intensities in [0, 1], row-major, shape (height, width).
All rounding in this package is round-half-up (floor(x + 0.5)) so results
are identical across platforms.
"""

import os
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, PgmDataError, PgmHeaderError

MA = "MA"
NORMAL = "NORMAL"
LABELS = (MA, NORMAL)


def round_half_up(x):
    """Round to nearest integer, ties toward +inf. Works on arrays too."""
    return np.floor(np.asarray(x, dtype=np.float64) + 0.5).astype(np.int64)


@dataclass(frozen=True)
class GrayImage:
    """Immutable grayscale raster, intensities in [0, 1]."""

    pixels: np.ndarray

    def __post_init__(self):
        p = np.ascontiguousarray(np.asarray(self.pixels, dtype=np.float64))
        if p.ndim != 2 or p.shape[0] < 1 or p.shape[1] < 1:
            raise ValueError("image must be a non-empty 2-D array")
        if not np.isfinite(p).all():
            raise ValueError("image intensities must be finite")
        if p.min() < 0.0 or p.max() > 1.0:
            raise ValueError("image intensities must lie in [0, 1]")
        p.setflags(write=False)
        object.__setattr__(self, "pixels", p)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class IntegralImage:
    """Cumulative sums: sums[y, x] = sum of pixels over (0,0)..(x,y) inclusive."""

    sums: np.ndarray

    def __post_init__(self):
        s = np.ascontiguousarray(np.asarray(self.sums, dtype=np.float64))
        if s.ndim != 2:
            raise ValueError("integral image must be 2-D")
        s.setflags(write=False)
        object.__setattr__(self, "sums", s)

    @property
    def width(self) -> int:
        return self.sums.shape[1]

    @property
    def height(self) -> int:
        return self.sums.shape[0]


@dataclass(frozen=True)
class Patch:
    """A labeled vertical strip cropped to the retinal band."""

    image: GrayImage
    label: str
    source_id: str
    center_x: int

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValueError(f"label must be one of {LABELS}, got {self.label!r}")


def load_pgm(path) -> GrayImage:
    """Read a binary (P5) PGM file, scaling intensities to [0, 1] by maxval.

    Raises FileNotFoundError for a missing file, PgmHeaderError for a
    malformed header, PgmDataError for truncated pixel data.
    """
    with open(path, "rb") as fh:
        data = fh.read()

    pos = 0

    def next_token():
        nonlocal pos
        while pos < len(data):
            if data[pos : pos + 1].isspace():
                pos += 1
            elif data[pos : pos + 1] == b"#":
                while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                    pos += 1
            else:
                break
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise PgmHeaderError(f"{path}: unexpected end of header")
        return data[start:pos]

    magic = next_token()
    if magic != b"P5":
        raise PgmHeaderError(f"{path}: not a binary PGM (magic {magic!r})")
    try:
        width = int(next_token())
        height = int(next_token())
        maxval = int(next_token())
    except ValueError as exc:
        raise PgmHeaderError(f"{path}: non-numeric header field") from exc
    if width < 1 or height < 1:
        raise PgmHeaderError(f"{path}: bad dimensions {width}x{height}")
    if not 0 < maxval <= 65535:
        raise PgmHeaderError(f"{path}: maxval {maxval} out of range")

    pos += 1  # single whitespace byte after maxval
    bytes_per = 1 if maxval < 256 else 2
    need = width * height * bytes_per
    raw = data[pos : pos + need]
    if len(raw) < need:
        raise PgmDataError(f"{path}: expected {need} pixel bytes, got {len(raw)}")
    dtype = np.uint8 if bytes_per == 1 else np.dtype(">u2")
    arr = np.frombuffer(raw, dtype=dtype).reshape(height, width)
    return GrayImage(arr.astype(np.float64) / float(maxval))


def save_pgm(img: GrayImage, path) -> None:
    """Write a binary PGM with maxval 255; pixel p becomes round-half-up(p*255)."""
    quant = round_half_up(img.pixels * 255.0).astype(np.uint8)
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(quant.tobytes())
    except OSError as exc:
        raise DataError(f"cannot write PGM to {path}: {exc}") from exc


def quantize8(img: GrayImage) -> GrayImage:
    """Snap intensities to the 8-bit grid used by save_pgm (k/255 levels)."""
    return GrayImage(round_half_up(img.pixels * 255.0).astype(np.float64) / 255.0)


def integral_image(img: GrayImage) -> IntegralImage:
    """Single-pass cumulative sums over rows then columns."""
    return IntegralImage(img.pixels.cumsum(axis=0).cumsum(axis=1))


def box_sum(ii: IntegralImage, x0: int, y0: int, x1: int, y1: int) -> float:
    """Sum of source pixels over the inclusive rectangle (x0,y0)..(x1,y1)."""
    if not (0 <= x0 <= x1 < ii.width and 0 <= y0 <= y1 < ii.height):
        raise ValueError(
            f"rectangle ({x0},{y0})..({x1},{y1}) outside {ii.width}x{ii.height}"
        )
    s = ii.sums
    total = s[y1, x1]
    if x0 > 0:
        total = total - s[y1, x0 - 1]
    if y0 > 0:
        total = total - s[y0 - 1, x1]
    if x0 > 0 and y0 > 0:
        total = total + s[y0 - 1, x0 - 1]
    return float(total)


def extract_strip(bscan: GrayImage, center_x: int, width: int = 30) -> GrayImage:
    """Full-height vertical strip of `width` columns centered at center_x.

    Centering is left-biased for even widths: columns
    [center_x - width//2, center_x - width//2 + width - 1].
    """
    if width < 1:
        raise ValueError("strip width must be >= 1")
    left = center_x - width // 2
    right = left + width - 1
    if left < 0 or right >= bscan.width:
        raise DataError(
            f"strip columns {left}..{right} exceed image width {bscan.width}"
        )
    return GrayImage(bscan.pixels[:, left : right + 1])


def crop_to_band(strip: GrayImage, band_height: int = 170) -> GrayImage:
    """Crop to `band_height` rows centered on the intensity-weighted row centroid.

    The centroid is rounded half-up; the window is clamped so it stays inside
    the strip. A zero-mass strip falls back to its geometric center.
    """
    h = strip.height
    if h < band_height:
        raise DataError(f"strip height {h} shorter than band height {band_height}")
    if h == band_height:
        return strip
    row_mass = strip.pixels.sum(axis=1)
    total = row_mass.sum()
    if total > 0.0:
        centroid = float(np.arange(h, dtype=np.float64) @ row_mass) / float(total)
    else:
        centroid = (h - 1) / 2.0
    center = int(round_half_up(centroid))
    top = center - band_height // 2
    top = min(max(top, 0), h - band_height)
    return GrayImage(strip.pixels[top : top + band_height, :])
