"""Bag-of-features OCT patch classification toolkit.

Pipeline: synthetic B-scan generation -> ROI strip extraction -> dense SURF
description -> k-means++ visual vocabulary -> term-vector encoding -> MLP
classification, plus PCA-feature baselines, rigid NCC registration, and a
four-metric evaluation harness. See the `bofscan` CLI for the end-to-end
workflows.
"""

from .backend import COMPILED, backend_name
from .imaging import (
    MA,
    NORMAL,
    GrayImage,
    IntegralImage,
    Patch,
    box_sum,
    crop_to_band,
    extract_strip,
    integral_image,
    load_pgm,
    save_pgm,
)
from .synth import SynthAnnotation, synth_bscan

__version__ = "0.1.0"

__all__ = [
    "COMPILED",
    "GrayImage",
    "IntegralImage",
    "MA",
    "NORMAL",
    "Patch",
    "SynthAnnotation",
    "backend_name",
    "box_sum",
    "crop_to_band",
    "extract_strip",
    "integral_image",
    "load_pgm",
    "save_pgm",
    "synth_bscan",
]
