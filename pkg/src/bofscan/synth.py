"""Seeded synthetic B-scan generator.

Stands in for clinical OCT data: horizontal bright bands over a dark noisy
background, with hyperreflective circular blobs (Gaussian profile) placed in
the upper half of the band region as lesions. Everything is a pure function
of the seed, so datasets regenerate bit-for-bit.
"""

import json
from dataclasses import dataclass

import numpy as np

from .errors import PlacementError
from .imaging import GrayImage

LESION_RADIUS_MIN = 3.0
LESION_RADIUS_MAX = 8.0
LESION_MIN_SEPARATION = 2.0 * LESION_RADIUS_MAX
LESION_EDGE_MARGIN = 24  # keeps the default 30-px strip inside the scan
PLACEMENT_ATTEMPTS_PER_LESION = 200


@dataclass(frozen=True)
class SynthAnnotation:
    """Ground truth for one synthetic B-scan."""

    lesion_centers: tuple  # ((x, y), ...) pixel coordinates
    rng_seed: int
    layer_rows: tuple  # ((top, bottom), ...) row extents of the bright bands

    def to_json(self) -> str:
        return json.dumps(
            {
                "seed": self.rng_seed,
                "lesions": [[int(x), int(y)] for x, y in self.lesion_centers],
                "layers": [[int(t), int(b)] for t, b in self.layer_rows],
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "SynthAnnotation":
        obj = json.loads(text)
        return cls(
            lesion_centers=tuple((int(x), int(y)) for x, y in obj["lesions"]),
            rng_seed=int(obj["seed"]),
            layer_rows=tuple((int(t), int(b)) for t, b in obj["layers"]),
        )


# Canonical layer template (thickness fraction of image height, level,
# is_bright). Real retinas keep near-constant layer anatomy across eyes;
# scans only jitter it slightly, which is what makes strips comparable.
_LAYER_TEMPLATE = (
    (0.030, 0.72, True),
    (0.020, 0.25, False),
    (0.025, 0.62, True),
    (0.032, 0.22, False),
    (0.022, 0.66, True),
    (0.045, 0.28, False),
    (0.025, 0.60, True),
    (0.024, 0.24, False),
    (0.032, 0.76, True),
)


def _place_lesions(rng, n_lesions, width, y_lo, y_hi):
    """Rejection-sample non-overlapping centers in [y_lo, y_hi]."""
    centers = []
    x_lo, x_hi = LESION_EDGE_MARGIN, width - 1 - LESION_EDGE_MARGIN
    if x_hi <= x_lo or y_hi <= y_lo:
        raise PlacementError("image too small for lesion placement margins")
    budget = PLACEMENT_ATTEMPTS_PER_LESION * max(n_lesions, 1)
    attempts = 0
    while len(centers) < n_lesions:
        if attempts >= budget:
            raise PlacementError(
                f"could not place {n_lesions} lesions in {attempts} attempts"
            )
        attempts += 1
        x = int(rng.integers(x_lo, x_hi + 1))
        y = int(rng.integers(y_lo, y_hi + 1))
        if all(
            (x - px) ** 2 + (y - py) ** 2 >= LESION_MIN_SEPARATION**2
            for px, py in centers
        ):
            centers.append((x, y))
    return centers


def synth_bscan(seed: int, n_lesions: int, width: int = 768, height: int = 496):
    """Generate one synthetic B-scan and its annotation.

    Returns (GrayImage, SynthAnnotation). Deterministic given the arguments;
    raises PlacementError if n_lesions cannot be placed without overlap.
    Lesions are hyperreflective Gaussian blobs in the upper half of the band
    region, each casting a faint shadow toward the lower layers.
    """
    if n_lesions < 0:
        raise ValueError("n_lesions must be >= 0")
    if width < 64 or height < 64:
        raise ValueError("image must be at least 64x64")

    rng = np.random.default_rng(seed)
    img = np.full((height, width), 0.05, dtype=np.float64)

    band_top = int(round(height * 0.34)) + int(rng.integers(-8, 9))
    layer_rows = []
    row = band_top
    for frac, level, bright in _LAYER_TEMPLATE:
        thickness = max(2, int(round(frac * height)) + int(rng.integers(-2, 3)))
        bottom = min(row + thickness - 1, height - 1)
        img[row : bottom + 1, :] = level + rng.uniform(-0.04, 0.04)
        if bright:
            layer_rows.append((row, bottom))
        row = bottom + 1
    band_bottom = row - 1

    band_mid = (band_top + band_bottom) // 2
    y_lo = band_top + int(LESION_RADIUS_MAX) + 1
    centers = _place_lesions(rng, n_lesions, width, y_lo, band_mid - 1)

    yy, xx = np.mgrid[0:height, 0:width]
    for cx, cy in centers:
        radius = rng.uniform(LESION_RADIUS_MIN, LESION_RADIUS_MAX)
        amplitude = rng.uniform(0.40, 0.55)
        sigma = radius / 2.0
        d2 = (xx - cx) ** 2 + (yy - cy) ** 2
        blob = amplitude * np.exp(-d2 / (2.0 * sigma * sigma))
        blob[d2 > (2.5 * radius) ** 2] = 0.0
        img += blob
        # hyporeflective shadow cast below the blob, as on real scans
        ri = int(round(radius))
        shadow_top = min(cy + ri + 1, band_bottom)
        img[shadow_top : band_bottom + 1, max(cx - ri, 0) : cx + ri + 1] *= 0.75

    img += rng.normal(0.0, 0.02, size=(height, width))
    np.clip(img, 0.0, 1.0, out=img)

    ann = SynthAnnotation(
        lesion_centers=tuple(centers),
        rng_seed=int(seed),
        layer_rows=tuple(layer_rows),
    )
    return GrayImage(img), ann
