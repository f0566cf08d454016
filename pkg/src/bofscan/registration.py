"""Rigid (similarity) image alignment by exhaustive correlation search.

The search grid covers rotation angle, uniform scale, and integer
translations. Scoring is normalized cross-correlation. The coarsest pyramid
level (2x box-filter downsampling per level) is scanned exhaustively; each
subsequent level searches +/- one previous step per component at halved
steps around the incumbent, evaluated at full resolution, with the identity
and the incumbent always kept in the candidate set. Ties break
lexicographically on (angle, scale, tx, ty).
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .backend import kernels
from .errors import DataError
from .imaging import GrayImage


def _normalize_angle(a: float) -> float:
    a = math.fmod(a, 360.0)
    if a <= -180.0:
        a += 360.0
    elif a > 180.0:
        a -= 360.0
    return a


@dataclass(frozen=True)
class RigidParams:
    """Rotate by angle (degrees) and scale about the image center, then translate."""

    angle: float
    scale: float
    tx: float
    ty: float

    def __post_init__(self):
        if not self.scale > 0.0:
            raise ValueError("scale must be positive")
        object.__setattr__(self, "angle", _normalize_angle(float(self.angle)))

    def key(self):
        return (self.angle, self.scale, self.tx, self.ty)


IDENTITY = RigidParams(0.0, 1.0, 0.0, 0.0)


@dataclass(frozen=True)
class SearchSpace:
    angle_range: tuple = (-10.0, 10.0, 1.0)  # (min, max, step) degrees
    scale_range: tuple = (0.9, 1.1, 0.02)  # (min, max, step)
    translation_radius: int = 20  # pixels
    pyramid_levels: int = 3

    def __post_init__(self):
        for lo, hi, step in (self.angle_range, self.scale_range):
            if step <= 0.0 or lo > hi:
                raise ValueError("range must have min <= max and step > 0")
        if self.translation_radius < 0:
            raise ValueError("translation radius must be >= 0")
        if self.pyramid_levels < 1:
            raise ValueError("pyramid_levels must be >= 1")


def rigid_inverse(p: RigidParams) -> RigidParams:
    """Exact group inverse of the rigid-similarity transform."""
    rad = math.radians(p.angle)
    c, s = math.cos(rad), math.sin(rad)
    inv_scale = 1.0 / p.scale
    return RigidParams(
        angle=-p.angle,
        scale=inv_scale,
        tx=-(c * p.tx + s * p.ty) * inv_scale,
        ty=-(-s * p.tx + c * p.ty) * inv_scale,
    )


def ncc(a: GrayImage, b: GrayImage) -> float:
    """Pearson correlation of the two pixel vectors after mean removal."""
    if a.width != b.width or a.height != b.height:
        raise ValueError("images must have identical dimensions")
    x = a.pixels.ravel()
    y = b.pixels.ravel()
    xm = x - x.mean()
    ym = y - y.mean()
    sx = float(xm @ xm)
    sy = float(ym @ ym)
    if sx <= 0.0 or sy <= 0.0:
        raise DataError("ncc undefined for a zero-variance image")
    r = float(xm @ ym) / (math.sqrt(sx) * math.sqrt(sy))
    return min(1.0, max(-1.0, r))


def warp(img: GrayImage, p: RigidParams) -> GrayImage:
    """Apply the transform by inverse mapping with bilinear sampling."""
    out = kernels.warp_rigid(img.pixels, p.angle, p.scale, p.tx, p.ty)
    return GrayImage(np.clip(out, 0.0, 1.0))


def _downsample2x(a: np.ndarray) -> np.ndarray:
    h2, w2 = a.shape[0] // 2, a.shape[1] // 2
    b = a[: 2 * h2, : 2 * w2]
    return (b[0::2, 0::2] + b[0::2, 1::2] + b[1::2, 0::2] + b[1::2, 1::2]) / 4.0


def _grid_values(lo: float, hi: float, step: float, identity: float):
    n = int(math.floor((hi - lo) / step + 1e-9))
    values = [lo + i * step for i in range(n + 1)]
    if lo <= identity <= hi and not any(abs(v - identity) < 1e-12 for v in values):
        values.append(identity)
        values.sort()
    return values


def _coarse_scores(fixed_lvl, moving_lvl, angle, scale, r):
    """NCC against the fixed level image for every integer shift in [-r, r]^2.

    The moving image is warped once (angle/scale only) onto a canvas padded
    by r; each translation is then a shifted window of that canvas, which is
    sample-for-sample identical to warping with the translation included.
    Returns scores[itx, ity] for tx, ty ascending; zero-variance windows
    score -2.
    """
    hl, wl = fixed_lvl.shape
    canvas = kernels.warp_rigid(
        moving_lvl, angle, scale, 0.0, 0.0, hl + 2 * r, wl + 2 * r, -float(r), -float(r)
    )
    n = float(hl * wl)
    fz = fixed_lvl - fixed_lvl.mean()
    den_f = math.sqrt(float((fz * fz).sum()))

    def window_sums(arr):
        sat = np.zeros((arr.shape[0] + 1, arr.shape[1] + 1), dtype=np.float64)
        np.cumsum(np.cumsum(arr, axis=0), axis=1, out=sat[1:, 1:])
        m = 2 * r + 1
        return (
            sat[hl : hl + m, wl : wl + m]
            - sat[:m, wl : wl + m]
            - sat[hl : hl + m, :m]
            + sat[:m, :m]
        )

    sum_w = window_sums(canvas)
    sum_w2 = window_sums(canvas * canvas)

    s0, s1 = canvas.strides
    m = 2 * r + 1
    windows = np.lib.stride_tricks.as_strided(
        canvas, shape=(m, m, hl, wl), strides=(s0, s1, s0, s1), writeable=False
    )
    cross = np.einsum("abyx,yx->ab", windows, fz)

    num = cross - sum_w * (fz.sum() / n)
    var_w = sum_w2 - sum_w * sum_w / n
    scores = np.full((m, m), -2.0)
    ok = var_w > 0.0
    scores[ok] = num[ok] / (den_f * np.sqrt(var_w[ok]))
    np.clip(scores, -2.0, 1.0, out=scores)
    # scores is indexed [a, b] with a = r - ty, b = r - tx; reorder to
    # [itx, ity] with both translations ascending.
    return scores[::-1, ::-1].T


def rigid_register(fixed: GrayImage, moving: GrayImage, space: SearchSpace = None,
                   incumbents_out: list = None):
    """Best RigidParams p maximizing ncc(fixed, warp(moving, p)) over the grid.

    Returns (params, score) with the score recomputed at full resolution.
    Deterministic; lexicographic (angle, scale, tx, ty) tie-break. If
    incumbents_out is a list, the per-level incumbents are appended to it.
    """
    if space is None:
        space = SearchSpace()
    if fixed.width != moving.width or fixed.height != moving.height:
        raise ValueError("images must have identical dimensions")
    if float(fixed.pixels.var()) <= 0.0 or float(moving.pixels.var()) <= 0.0:
        raise DataError("ncc undefined for a zero-variance image")

    levels = space.pyramid_levels
    while levels > 1 and min(fixed.height, fixed.width) // 2 ** (levels - 1) < 8:
        levels -= 1
    factor = 2 ** (levels - 1)

    angles = _grid_values(*space.angle_range, identity=0.0)
    scales = _grid_values(*space.scale_range, identity=1.0)
    r_lvl = space.translation_radius // factor

    fixed_lvl = fixed.pixels
    moving_lvl = moving.pixels
    for _ in range(levels - 1):
        fixed_lvl = _downsample2x(fixed_lvl)
        moving_lvl = _downsample2x(moving_lvl)

    shifts = [factor * k for k in range(-r_lvl, r_lvl + 1)]
    best = None
    best_score = -math.inf
    for angle in angles:
        for scale in scales:
            grid = _coarse_scores(fixed_lvl, moving_lvl, angle, scale, r_lvl)
            flat = int(np.argmax(grid))
            score = float(grid.flat[flat])
            if score > best_score:
                itx, ity = divmod(flat, len(shifts))
                best = RigidParams(angle, scale, float(shifts[itx]), float(shifts[ity]))
                best_score = score
    if incumbents_out is not None:
        incumbents_out.append(best)

    cache = {}

    def fast_score(p):
        k = p.key()
        if k not in cache:
            cache[k] = float(
                kernels.warp_ncc(fixed.pixels, moving.pixels, p.angle, p.scale,
                                 p.tx, p.ty)
            )
        return cache[k]

    # levels-1 halved-step rounds per the pyramid schedule, then a few extra
    # polish rounds at 1-px translation steps so narrow scale/translation
    # ridges converge to the peak instead of stalling one lattice off it
    polish_rounds = 3
    max_moves = 25
    for k in range(1, levels + polish_rounds):
        ha = space.angle_range[2] / 2.0**k
        hs = space.scale_range[2] / 2.0**k
        ht = factor // 2**k if factor >> k else 1
        best_score = fast_score(best)
        # hill-climb at this step size: joint +/- one step per component,
        # repeated until no strict improvement (bounded)
        for _ in range(max_moves):
            candidates = []
            for da, ds, dtx, dty in itertools.product(
                (-ha, 0.0, ha), (-hs, 0.0, hs), (-ht, 0, ht), (-ht, 0, ht)
            ):
                s = best.scale + ds
                if s <= 0.0:
                    continue
                candidates.append(
                    RigidParams(best.angle + da, s, best.tx + dtx, best.ty + dty)
                )
            candidates.sort(key=RigidParams.key)
            step_best = max(candidates, key=fast_score)
            if fast_score(step_best) > best_score:
                best = step_best
                best_score = fast_score(step_best)
            else:
                break
        if incumbents_out is not None:
            incumbents_out.append(best)

    # Final scores use the canonical ncc-of-warp path; the identity check
    # guarantees the result never scores below the identity parameters.
    def full_score(p):
        try:
            return ncc(fixed, warp(moving, p))
        except DataError:
            return -2.0

    best_full = full_score(best)
    id_full = full_score(IDENTITY)
    if id_full > best_full or (id_full == best_full and IDENTITY.key() < best.key()):
        return IDENTITY, id_full
    return best, best_full
