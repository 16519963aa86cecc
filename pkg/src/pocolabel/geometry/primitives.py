"""Planar primitives: points, rings, and regions.

Coordinates are image-space pixels: x grows right, y grows down, subpixel
values allowed.  Ring orientation is defined by the shoelace sign, so an
exterior ring has positive signed area and a hole has negative signed area;
that convention is independent of how the axes are drawn.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..errors import EmptyRegion

Point = tuple[float, float]


def _check_finite(points) -> None:
    for x, y in points:
        if not (math.isfinite(x) and math.isfinite(y)):
            raise ValueError(f"non-finite coordinate ({x}, {y})")


def signed_ring_area(vertices) -> float:
    """Shoelace signed area; positive for our exterior orientation."""
    total = 0.0
    n = len(vertices)
    for i in range(n):
        x1, y1 = vertices[i]
        x2, y2 = vertices[(i + 1) % n]
        total += x1 * y2 - x2 * y1
    return total / 2.0


def point_segment_distance(p: Point, a: Point, b: Point) -> float:
    """Distance from p to the closed segment a-b."""
    px, py = p
    ax, ay = a
    bx, by = b
    dx, dy = bx - ax, by - ay
    seg_len_sq = dx * dx + dy * dy
    if seg_len_sq == 0.0:
        return math.hypot(px - ax, py - ay)
    t = ((px - ax) * dx + (py - ay) * dy) / seg_len_sq
    t = max(0.0, min(1.0, t))
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy))


@dataclass(frozen=True)
class Polygon:
    """A simple closed ring (the edge back to the first vertex is implicit)."""

    vertices: tuple[Point, ...]

    def __post_init__(self):
        verts = tuple((float(x), float(y)) for x, y in self.vertices)
        object.__setattr__(self, "vertices", verts)
        if len(verts) < 3:
            raise ValueError(f"polygon needs >= 3 vertices, got {len(verts)}")
        _check_finite(verts)
        for i in range(len(verts)):
            if verts[i] == verts[(i + 1) % len(verts)]:
                raise ValueError(f"consecutive duplicate vertex {verts[i]}")

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def signed_area(self) -> float:
        return signed_ring_area(self.vertices)

    @property
    def area(self) -> float:
        return abs(self.signed_area)

    def bounds(self) -> tuple[float, float, float, float]:
        xs = [v[0] for v in self.vertices]
        ys = [v[1] for v in self.vertices]
        return min(xs), min(ys), max(xs), max(ys)

    def contains(self, p: Point) -> bool:
        """Even-odd ray test; points exactly on the boundary are unspecified."""
        return _crossings(self.vertices, p) % 2 == 1

    def reversed(self) -> "Polygon":
        return Polygon(tuple(reversed(self.vertices)))

    def oriented(self, positive: bool) -> "Polygon":
        if (self.signed_area > 0) == positive:
            return self
        return self.reversed()

    def translated(self, dx: float, dy: float) -> "Polygon":
        return Polygon(tuple((x + dx, y + dy) for x, y in self.vertices))

    def flat_coords(self) -> list[float]:
        """COCO-style [x1, y1, x2, y2, ...] list."""
        out: list[float] = []
        for x, y in self.vertices:
            out.extend((x, y))
        return out


def _crossings(vertices, p: Point) -> int:
    px, py = p
    count = 0
    n = len(vertices)
    for i in range(n):
        x1, y1 = vertices[i]
        x2, y2 = vertices[(i + 1) % n]
        if (y1 > py) != (y2 > py):
            x_cross = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
            if px < x_cross:
                count += 1
    return count


@dataclass(frozen=True)
class Region:
    """One annotated shape: disjoint exterior rings plus interior holes.

    Shells carry positive signed area, holes negative; ``area`` is the
    covered surface.  An empty region (no shells) is a legal value and the
    identity element of the boolean operations.
    """

    shells: tuple[Polygon, ...] = ()
    holes: tuple[Polygon, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "shells", tuple(p.oriented(True) for p in self.shells))
        object.__setattr__(self, "holes", tuple(p.oriented(False) for p in self.holes))

    @property
    def is_empty(self) -> bool:
        return not self.shells

    @property
    def area(self) -> float:
        return sum(p.area for p in self.shells) - sum(p.area for p in self.holes)

    def rings(self) -> tuple[Polygon, ...]:
        return self.shells + self.holes

    def translated(self, dx: float, dy: float) -> "Region":
        return Region(
            tuple(p.translated(dx, dy) for p in self.shells),
            tuple(p.translated(dx, dy) for p in self.holes),
        )


def polygon_area(polygon: Polygon) -> float:
    """Absolute shoelace area of a single ring."""
    return polygon.area


def bounding_box(region: Region) -> tuple[float, float, float, float]:
    """Tightest (x, y, width, height) box over all exterior-ring vertices."""
    if region.is_empty:
        raise EmptyRegion("cannot compute the bounding box of an empty region")
    boxes = [shell.bounds() for shell in region.shells]
    min_x = min(b[0] for b in boxes)
    min_y = min(b[1] for b in boxes)
    max_x = max(b[2] for b in boxes)
    max_y = max(b[3] for b in boxes)
    return min_x, min_y, max_x - min_x, max_y - min_y


def point_in_region(p: Point, region: Region) -> bool:
    """Even-odd containment over all rings; a point inside a hole is outside."""
    crossings = 0
    for ring in region.rings():
        crossings += _crossings(ring.vertices, p)
    return crossings % 2 == 1
