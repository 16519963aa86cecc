"""COCO-style run-length codec for binary masks.

Runs are measured over the column-major flattening of the mask (column 0
top to bottom, then column 1, ...).  The first count is always a background
run and may be 0; counts are stored as plain integers, never as the
compressed byte string.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import CountOverflow
from .raster import Mask


@dataclass(frozen=True)
class Rle:
    width: int
    height: int
    counts: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))
        if self.width <= 0 or self.height <= 0:
            raise ValueError("RLE dimensions must be positive")
        if any(c < 0 for c in self.counts):
            raise ValueError("RLE counts must be non-negative")
        if any(c == 0 for c in self.counts[1:]):
            raise ValueError("only the leading RLE count may be zero")

    def to_coco(self) -> dict:
        """COCO segmentation object: {"counts": [...], "size": [h, w]}."""
        return {"counts": list(self.counts), "size": [self.height, self.width]}

    @classmethod
    def from_coco(cls, obj: dict) -> "Rle":
        h, w = obj["size"]
        return cls(width=int(w), height=int(h), counts=tuple(obj["counts"]))


def rle_encode(mask: Mask) -> Rle:
    height, width = mask.shape
    flat = mask.ravel(order="F")
    change = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    boundaries = np.concatenate(([0], change, [flat.size]))
    counts = np.diff(boundaries).tolist()
    if flat[0]:
        counts = [0] + counts  # runs must start with background
    return Rle(width=width, height=height, counts=tuple(counts))


def rle_decode(rle: Rle) -> Mask:
    total = sum(rle.counts)
    if total != rle.width * rle.height:
        raise CountOverflow(
            f"counts sum to {total}, expected {rle.width * rle.height}"
        )
    flat = np.zeros(total, dtype=bool)
    pos = 0
    value = False
    for count in rle.counts:
        if value:
            flat[pos : pos + count] = True
        pos += count
        value = not value
    return flat.reshape((rle.width, rle.height)).T.copy()
