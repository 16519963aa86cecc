"""Flood-fill selection: grow a region of similar color around a click.

The image is optionally gaussian-blurred first, then the 4-connected
component of pixels whose maximum per-channel difference from the seed
pixel's (blurred) color stays within the threshold is traced into a region.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ..errors import SeedOutOfBounds
from .contours import trace_contours
from .primitives import Point, Region

# 4-connectivity: diagonal color bridges must not leak
_CROSS = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]])


@dataclass(frozen=True)
class FloodParams:
    color_threshold: float = 10.0
    blur_sigma: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.color_threshold) and self.color_threshold >= 0):
            raise ValueError("color_threshold must be finite and >= 0")
        if not (math.isfinite(self.blur_sigma) and self.blur_sigma >= 0):
            raise ValueError("blur_sigma must be finite and >= 0")


def gaussian_blur(image: np.ndarray, sigma: float) -> np.ndarray:
    """Separable gaussian with edge-clamped borders and kernel radius ceil(3*sigma)."""
    out = image.astype(np.float64)
    if sigma <= 0:
        return out
    radius = math.ceil(3.0 * sigma)
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-(offsets**2) / (2.0 * sigma * sigma))
    kernel /= kernel.sum()
    out = ndimage.correlate1d(out, kernel, axis=0, mode="nearest")
    out = ndimage.correlate1d(out, kernel, axis=1, mode="nearest")
    return out


def flood_mask(image: np.ndarray, seed: Point, params: FloodParams) -> np.ndarray:
    """The 4-connected component mask around the seed; seed color sampled post-blur."""
    height, width = image.shape[:2]
    col, row = int(math.floor(seed[0])), int(math.floor(seed[1]))
    if not (0 <= col < width and 0 <= row < height):
        raise SeedOutOfBounds(f"seed ({seed[0]}, {seed[1]}) outside {width}x{height} image")
    blurred = gaussian_blur(image, params.blur_sigma)
    seed_color = blurred[row, col]
    close = np.abs(blurred - seed_color).max(axis=2) <= params.color_threshold
    labels, _ = ndimage.label(close, structure=_CROSS)
    return labels == labels[row, col]


def flood_region(image: np.ndarray, seed: Point, params: FloodParams) -> Region:
    """Region enclosing the area of uniform color around the seed."""
    return trace_contours(flood_mask(image, seed, params))
