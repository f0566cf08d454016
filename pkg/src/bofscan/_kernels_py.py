"""Numpy implementations of the hot kernels.

Drop-in equivalents of the compiled extension (_kernels.pyx); selected at
import time when the extension is unavailable or BOFSCAN_PURE_PYTHON is set.
Both backends use the same per-element formulas, so they agree to float
rounding (<= 1e-9), though not bit-for-bit.
"""

import math

import numpy as np


def warp_rigid(src, angle_deg, scale, tx, ty, out_h=0, out_w=0, ox=0.0, oy=0.0):
    """Inverse-map rigid-similarity warp with bilinear sampling.

    Output pixel (i, j) corresponds to output-frame coordinates
    (i + ox, j + oy) and samples the source at the inverse of
    p_out = scale * R(angle) * (p_in - c) + c + t, where c is the source
    center ((w-1)/2, (h-1)/2). Samples outside the source are 0.
    out_h/out_w of 0 mean "same shape as src".
    """
    src = np.asarray(src, dtype=np.float64)
    h, w = src.shape
    if out_h <= 0:
        out_h = h
    if out_w <= 0:
        out_w = w
    rad = math.radians(angle_deg)
    ca, sa = math.cos(rad), math.sin(rad)
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0

    u = (np.arange(out_w, dtype=np.float64) + ox) - cx - tx  # per-column
    v = (np.arange(out_h, dtype=np.float64) + oy) - cy - ty  # per-row
    sx = (ca * u[None, :] + sa * v[:, None]) / scale + cx
    sy = (-sa * u[None, :] + ca * v[:, None]) / scale + cy

    valid = (sx >= 0.0) & (sx <= w - 1.0) & (sy >= 0.0) & (sy <= h - 1.0)
    x0 = np.floor(sx)
    y0 = np.floor(sy)
    fx = sx - x0
    fy = sy - y0
    x0i = np.clip(x0.astype(np.intp), 0, w - 1)
    y0i = np.clip(y0.astype(np.intp), 0, h - 1)
    x1i = np.clip(x0i + 1, 0, w - 1)
    y1i = np.clip(y0i + 1, 0, h - 1)

    v00 = src[y0i, x0i]
    v01 = src[y0i, x1i]
    v10 = src[y1i, x0i]
    v11 = src[y1i, x1i]
    out = (1.0 - fy) * ((1.0 - fx) * v00 + fx * v01) + fy * (
        (1.0 - fx) * v10 + fx * v11
    )
    out[~valid] = 0.0
    return out


def warp_ncc(fixed, moving, angle_deg, scale, tx, ty):
    """NCC of fixed against warp(moving, params); -2.0 on zero variance."""
    fixed = np.asarray(fixed, dtype=np.float64)
    w = np.clip(warp_rigid(np.asarray(moving, dtype=np.float64), angle_deg,
                           scale, tx, ty), 0.0, 1.0)
    n = float(fixed.size)
    sf = float(fixed.sum())
    sf2 = float((fixed * fixed).sum())
    sw = float(w.sum())
    sw2 = float((w * w).sum())
    sfw = float((fixed * w).sum())
    df = sf2 - sf * sf / n
    dw = sw2 - sw * sw / n
    if df <= 0.0 or dw <= 0.0:
        return -2.0
    r = (sfw - sf * sw / n) / (math.sqrt(df) * math.sqrt(dw))
    return min(1.0, max(-1.0, r))


def surf_descriptors(sat, xs, ys, scale):
    """Unnormalized 64-value descriptors for keypoints on one integral image.

    sat is the zero-padded summed-area table of the (padded) patch:
    sat[j, i] = sum of pixels[:j, :i]. For each keypoint, 20x20 samples at
    offsets (k - 9.5)*scale are taken; each contributes Haar responses of
    half-width round(scale) weighted by a Gaussian (sigma = 3.3*scale) at the
    exact offset, accumulated into its 5x5 sample subregion. Layout per
    subregion q (row-major): indices 4q..4q+3 = sum dx, sum dy, sum|dx|,
    sum|dy|.
    """
    sat = np.asarray(sat, dtype=np.float64)
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    n = xs.shape[0]
    hp = sat.shape[0] - 1  # pixel rows of the underlying image
    wp = sat.shape[1] - 1
    half = max(1, int(math.floor(scale + 0.5)))
    sigma = 3.3 * scale
    offs = (np.arange(20, dtype=np.float64) - 9.5) * scale
    uu, vv = np.meshgrid(offs, offs)  # uu varies along x (axis 1), vv along y
    wgt = np.exp(-(uu * uu + vv * vv) / (2.0 * sigma * sigma))

    cx = np.floor(xs[:, None, None] + uu[None, :, :] + 0.5).astype(np.intp)
    cy = np.floor(ys[:, None, None] + vv[None, :, :] + 0.5).astype(np.intp)
    if n:
        if (
            (cx - half).min() < 0
            or (cx + half).max() > wp
            or (cy - half).min() < 0
            or (cy + half).max() > hp
        ):
            raise ValueError("Haar footprint outside image")

    ya, yb = cy - half, cy + half
    xl, xm, xr = cx - half, cx, cx + half
    right = sat[yb, xr] - sat[ya, xr] - sat[yb, xm] + sat[ya, xm]
    left = sat[yb, xm] - sat[ya, xm] - sat[yb, xl] + sat[ya, xl]
    dx = right - left
    bottom = sat[yb, xr] - sat[cy, xr] - sat[yb, xl] + sat[cy, xl]
    top = sat[cy, xr] - sat[ya, xr] - sat[cy, xl] + sat[ya, xl]
    dy = bottom - top

    wdx = wgt * dx
    wdy = wgt * dy
    wadx = wgt * np.abs(dx)
    wady = wgt * np.abs(dy)

    def pool(a):
        return a.reshape(n, 4, 5, 4, 5).sum(axis=(2, 4))

    desc = np.stack([pool(wdx), pool(wdy), pool(wadx), pool(wady)], axis=-1)
    return np.ascontiguousarray(desc.reshape(n, 64))
