"""Dense upright SURF descriptors from Haar responses on integral images.

A descriptor covers a 20s-wide support around its keypoint: 4x4 subregions,
each sampled at 5x5 points spaced s apart, each sample contributing Haar
responses (filter side 2*round(s)) weighted by a Gaussian (sigma = 3.3s) at
the exact sample offset. Per subregion the quadruple (sum dx, sum dy,
sum|dx|, sum|dy|) is emitted, subregions in row-major order, and the whole
64-vector is L2-normalized (an all-zero vector stays zero). Sample centers
on the pixel grid are rounded half-up.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

from .backend import kernels
from .imaging import GrayImage, IntegralImage, box_sum

DESCRIPTOR_DIM = 64


@dataclass(frozen=True)
class Keypoint:
    x: float
    y: float
    scale: float = 1.0

    def __post_init__(self):
        if self.scale < 1.0:
            raise ValueError("keypoint scale must be >= 1")


def haar_x(ii: IntegralImage, cx: int, cy: int, L: int) -> float:
    """Horizontal Haar response: right L/2 x L half minus left half."""
    if L < 2 or L % 2 != 0:
        raise ValueError("Haar filter side must be a positive even integer")
    h = L // 2
    right = box_sum(ii, cx, cy - h, cx + h - 1, cy + h - 1)
    left = box_sum(ii, cx - h, cy - h, cx - 1, cy + h - 1)
    return right - left


def haar_y(ii: IntegralImage, cx: int, cy: int, L: int) -> float:
    """Vertical Haar response: bottom L x L/2 half minus top half."""
    if L < 2 or L % 2 != 0:
        raise ValueError("Haar filter side must be a positive even integer")
    h = L // 2
    bottom = box_sum(ii, cx - h, cy, cx + h - 1, cy + h - 1)
    top = box_sum(ii, cx - h, cy - h, cx + h - 1, cy - 1)
    return bottom - top


def dense_grid(width, height, nx, ny, margin=0):
    """nx*ny keypoints evenly spaced inside the margins, row-major order.

    For nx > 1, x_i = margin + i*(width-1-2*margin)/(nx-1); a single column
    (nx == 1) sits at the horizontal center. Same rule vertically.
    """
    if nx < 1 or ny < 1:
        raise ValueError("grid counts must be >= 1")
    if width - 1 - 2 * margin < 0 or height - 1 - 2 * margin < 0:
        raise ValueError("margin leaves no usable extent")
    if nx > 1:
        xs = [margin + i * (width - 1 - 2 * margin) / (nx - 1) for i in range(nx)]
    else:
        xs = [(width - 1) / 2.0]
    if ny > 1:
        ys = [margin + j * (height - 1 - 2 * margin) / (ny - 1) for j in range(ny)]
    else:
        ys = [(height - 1) / 2.0]
    return [Keypoint(x, y) for y in ys for x in xs]


def _padded_sat(pixels: np.ndarray) -> np.ndarray:
    """Zero-padded summed-area table: sat[j, i] = sum of pixels[:j, :i]."""
    h, w = pixels.shape
    sat = np.zeros((h + 1, w + 1), dtype=np.float64)
    np.cumsum(np.cumsum(pixels, axis=0), axis=1, out=sat[1:, 1:])
    return sat


def _normalize_rows(desc: np.ndarray) -> np.ndarray:
    norms = np.sqrt((desc * desc).sum(axis=1))
    nz = norms > 0.0
    desc[nz] /= norms[nz, None]
    return desc


def surf_descriptor(ii: IntegralImage, kp: Keypoint) -> np.ndarray:
    """Descriptor for one keypoint; support must fit inside the image."""
    sat = np.zeros((ii.height + 1, ii.width + 1), dtype=np.float64)
    sat[1:, 1:] = ii.sums
    desc = kernels.surf_descriptors(
        sat,
        np.array([kp.x], dtype=np.float64),
        np.array([kp.y], dtype=np.float64),
        kp.scale,
    )
    return _normalize_rows(desc)[0]


def describe_patch(patch: GrayImage, nx=8, ny=8, scale=1.0) -> np.ndarray:
    """All grid descriptors for one patch, shape (nx*ny, 64), grid order.

    The patch is edge-replication padded by ceil(10*scale)+1 on every side so
    every keypoint's support fits; the grid spans the original patch extent.
    """
    pad = math.ceil(10.0 * scale) + 1
    padded = np.pad(patch.pixels, pad, mode="edge")
    sat = _padded_sat(padded)
    grid = dense_grid(patch.width, patch.height, nx, ny)
    xs = np.array([kp.x + pad for kp in grid], dtype=np.float64)
    ys = np.array([kp.y + pad for kp in grid], dtype=np.float64)
    desc = kernels.surf_descriptors(sat, xs, ys, scale)
    return _normalize_rows(desc)


def write_descriptors_csv(path, source_ids, descriptor_sets) -> None:
    """One row per descriptor: source_id, kp_index, then the 64 values."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["source_id", "kp_index"] + [f"d{i:02d}" for i in range(DESCRIPTOR_DIM)]
        )
        for source_id, descriptors in zip(source_ids, descriptor_sets):
            for idx, row in enumerate(np.asarray(descriptors)):
                writer.writerow([source_id, idx] + [f"{v:.17g}" for v in row])


def read_descriptors_csv(path):
    """Inverse of write_descriptors_csv: (source_ids, list of (n, 64) arrays)."""
    groups: dict = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if len(header) != 2 + DESCRIPTOR_DIM:
            raise ValueError("unexpected descriptor CSV header")
        for row in reader:
            groups.setdefault(row[0], []).append([float(v) for v in row[2:]])
    ids = list(groups)
    return ids, [np.array(groups[i], dtype=np.float64) for i in ids]
