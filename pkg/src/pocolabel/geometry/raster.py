"""Region -> binary mask rasterization.

A mask is a numpy bool array of shape (height, width); pixel (row, col)
owns the unit square (col, row)-(col+1, row+1) and is set when its center
(col + 0.5, row + 0.5) is inside the region under the even-odd rule.
"""

from __future__ import annotations

import numpy as np

from .primitives import Region

Mask = np.ndarray  # shape (H, W), dtype bool


def new_mask(width: int, height: int) -> Mask:
    if width <= 0 or height <= 0:
        raise ValueError(f"mask dimensions must be positive, got {width}x{height}")
    return np.zeros((height, width), dtype=bool)


def rasterize(region: Region, width: int, height: int) -> Mask:
    """Scanline even-odd fill over all rings (shells and holes together)."""
    mask = new_mask(width, height)
    if region.is_empty:
        return mask

    edges = []
    for ring in region.rings():
        verts = ring.vertices
        for i in range(len(verts)):
            edges.append((*verts[i], *verts[(i + 1) % len(verts)]))
    x1, y1, x2, y2 = np.asarray(edges, dtype=float).T

    yc = np.arange(height, dtype=float) + 0.5  # (R,)
    # edge crossed by scanline y when exactly one endpoint is above it
    crossed = (y1[None, :] > yc[:, None]) != (y2[None, :] > yc[:, None])  # (R, E)
    with np.errstate(divide="ignore", invalid="ignore"):
        xs = x1 + (yc[:, None] - y1) * (x2 - x1) / (y2 - y1)
    xs = np.where(crossed, xs, np.inf)
    xs.sort(axis=1)

    centers = np.arange(width, dtype=float) + 0.5
    counts = crossed.sum(axis=1)
    for r in range(height):
        n = counts[r]
        if n == 0:
            continue
        # parity of crossings strictly left of each pixel center
        left = np.searchsorted(xs[r, :n], centers, side="left")
        mask[r] = (left % 2) == 1
    return mask
