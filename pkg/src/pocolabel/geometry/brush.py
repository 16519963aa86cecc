"""Brush strokes: paint a capsule around a dragged path and trace it.

Disk stamps are dropped along the path at spacing radius/2, rasterized on a
local grid, and the result is traced back into a polygon region, so brush
output composes with the rest of the region algebra.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .contours import trace_contours
from .primitives import Point, Region


@dataclass(frozen=True)
class BrushParams:
    radius: float

    def __post_init__(self):
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise ValueError("brush radius must be finite and positive")


def _stamp_centers(path: list[Point], spacing: float) -> list[Point]:
    centers = [path[0]]
    for (x1, y1), (x2, y2) in zip(path, path[1:]):
        length = math.hypot(x2 - x1, y2 - y1)
        if length == 0:
            continue
        steps = math.ceil(length / spacing)
        for s in range(1, steps + 1):
            t = s / steps
            centers.append((x1 + t * (x2 - x1), y1 + t * (y2 - y1)))
    return centers


def brush_stroke_to_region(path: list[Point], params: BrushParams) -> Region:
    """Pixels within ``radius`` of the dragged path, as a traced region."""
    if not path:
        raise ValueError("brush path must not be empty")
    radius = params.radius
    centers = _stamp_centers([(float(x), float(y)) for x, y in path], radius / 2.0)

    xs = [p[0] for p in centers]
    ys = [p[1] for p in centers]
    # local grid with one pixel of slack around the capsule
    min_x = math.floor(min(xs) - radius) - 1
    min_y = math.floor(min(ys) - radius) - 1
    width = math.ceil(max(xs) + radius) + 1 - min_x
    height = math.ceil(max(ys) + radius) + 1 - min_y

    mask = np.zeros((height, width), dtype=bool)
    r_int = math.ceil(radius)
    for cx, cy in centers:
        lx, ly = cx - min_x, cy - min_y
        c0 = max(0, math.floor(lx - r_int) - 1)
        c1 = min(width, math.ceil(lx + r_int) + 2)
        r0 = max(0, math.floor(ly - r_int) - 1)
        r1 = min(height, math.ceil(ly + r_int) + 2)
        cols = np.arange(c0, c1) + 0.5
        rows = np.arange(r0, r1) + 0.5
        d2 = (cols[None, :] - lx) ** 2 + (rows[:, None] - ly) ** 2
        mask[r0:r1, c0:c1] |= d2 <= radius * radius
    return trace_contours(mask).translated(min_x, min_y)
