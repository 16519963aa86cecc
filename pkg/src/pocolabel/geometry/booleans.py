"""Region set algebra: union, difference, intersection, self-repair.

Vertex-space boolean operations are delegated to shapely (GEOS); this module
owns the conversion between our even-odd :class:`Region` values and GEOS
geometries, coordinate snapping, and degenerate-fragment cleanup.  Raster
behaviour is pinned by tests against the pixelwise oracle in ``raster.py``.
"""

from __future__ import annotations

import shapely
from shapely.geometry import GeometryCollection, LineString, MultiPolygon
from shapely.geometry import Polygon as ShapelyPolygon
from shapely.ops import polygonize, unary_union
from shapely.validation import make_valid

from .primitives import Point, Polygon, Region, _crossings

# vertices closer than this snap together; fragments below MIN_AREA are noise
SNAP_DECIMALS = 7
MIN_AREA = 1e-6


def ring_interior_point(ring: Polygon) -> Point:
    """A point strictly inside a ring: scan between two distinct vertex rows."""
    ys = sorted({v[1] for v in ring.vertices})
    for i in range(len(ys) - 1):
        y = (ys[i] + ys[i + 1]) / 2.0
        xs = _scan_crossings(ring, y)
        if len(xs) >= 2:
            return ((xs[0] + xs[1]) / 2.0, y)
    raise ValueError("ring has no interior")


def _scan_crossings(ring: Polygon, y: float) -> list[float]:
    xs = []
    verts = ring.vertices
    for i in range(len(verts)):
        x1, y1 = verts[i]
        x2, y2 = verts[(i + 1) % len(verts)]
        if (y1 > y) != (y2 > y):
            xs.append(x1 + (y - y1) * (x2 - x1) / (y2 - y1))
    xs.sort()
    return xs


def _to_shapely(region: Region):
    if region.is_empty:
        return ShapelyPolygon()
    # assign each hole to the smallest shell whose interior contains it
    shells = list(region.shells)
    hole_lists: list[list] = [[] for _ in shells]
    order = sorted(range(len(shells)), key=lambda k: shells[k].area)
    for hole in region.holes:
        probe = ring_interior_point(hole)
        for k in order:
            if shells[k].contains(probe):
                hole_lists[k].append(list(hole.vertices))
                break
    parts = [
        ShapelyPolygon(list(shell.vertices), holes)
        for shell, holes in zip(shells, hole_lists)
    ]
    geom = shapely.union_all(parts)
    if not geom.is_valid:
        geom = make_valid(geom)
    return geom


def _snap(value: float) -> float:
    return round(value, SNAP_DECIMALS)


def _ring_from_coords(coords) -> Polygon | None:
    pts = [(_snap(x), _snap(y)) for x, y in coords]
    if len(pts) > 1 and pts[0] == pts[-1]:
        pts = pts[:-1]
    deduped = []
    for p in pts:
        if not deduped or p != deduped[-1]:
            deduped.append(p)
    if len(deduped) > 1 and deduped[0] == deduped[-1]:
        deduped.pop()
    if len(deduped) < 3:
        return None
    poly = Polygon(tuple(deduped))
    if poly.area < MIN_AREA:
        return None
    return poly


def _from_shapely(geom) -> Region:
    if geom.is_empty:
        return Region()
    if isinstance(geom, GeometryCollection):
        polys = [g for g in geom.geoms if isinstance(g, (ShapelyPolygon, MultiPolygon))]
        if not polys:
            return Region()
        geom = shapely.union_all(polys)
        if geom.is_empty:
            return Region()
    parts = geom.geoms if isinstance(geom, MultiPolygon) else [geom]
    shells: list[Polygon] = []
    holes: list[Polygon] = []
    for part in parts:
        shell = _ring_from_coords(part.exterior.coords)
        if shell is None:
            continue
        shells.append(shell.oriented(True))
        for interior in part.interiors:
            hole = _ring_from_coords(interior.coords)
            if hole is not None:
                holes.append(hole.oriented(False))
    return Region(tuple(shells), tuple(holes))


def region_union(a: Region, b: Region) -> Region:
    """Set union; painting with the brush on top of an annotation."""
    if a.is_empty:
        return b
    if b.is_empty:
        return a
    return _from_shapely(_to_shapely(a).union(_to_shapely(b)))


def region_subtract(a: Region, b: Region) -> Region:
    """Set difference a minus b; erasing may punch holes."""
    if a.is_empty or b.is_empty:
        return a
    return _from_shapely(_to_shapely(a).difference(_to_shapely(b)))


def region_clip(a: Region, width: float, height: float) -> Region:
    """Intersect a region with the image rectangle (0, 0)-(width, height)."""
    if a.is_empty:
        return a
    frame = ShapelyPolygon([(0, 0), (width, 0), (width, height), (0, height)])
    return _from_shapely(_to_shapely(a).intersection(frame))


def repair_ring(ring: Polygon) -> Region:
    """Re-polygonize a possibly self-intersecting ring with even-odd parity.

    The ring's segments are noded at their crossings; every resulting face
    whose interior point has odd crossing parity with the original ring is
    kept.  A simple ring comes back unchanged.
    """
    raw = ShapelyPolygon(list(ring.vertices))
    if raw.is_valid:
        return Region((ring,))
    closed = list(ring.vertices) + [ring.vertices[0]]
    noded = unary_union(LineString(closed))
    faces = []
    for face in polygonize(noded):
        shell = _ring_from_coords(face.exterior.coords)
        if shell is None:
            continue
        probe = ring_interior_point(shell)
        if _crossings(ring.vertices, probe) % 2 == 1:
            faces.append(face)
    if not faces:
        return Region()
    return _from_shapely(shapely.union_all(faces))
