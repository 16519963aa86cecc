"""Free-form stroke handling: auto-close test and Douglas-Peucker cleanup.

A captured stroke is a dense polyline from a click-drag-release gesture.
``simplify_stroke`` treats it as a closed ring, splits the ring at its two
farthest-apart points, and runs Douglas-Peucker on both halves, so the output
vertex set is always a subset of the input and every input point stays within
``epsilon`` of the simplified boundary.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import TooFewPoints
from .primitives import Point, Polygon, signed_ring_area


def should_autoclose(stroke: list[Point], min_close_distance: float) -> bool:
    """True when the gesture's endpoints are close enough to snap shut."""
    if not stroke:
        raise TooFewPoints("empty stroke")
    (x0, y0), (x1, y1) = stroke[0], stroke[-1]
    return math.hypot(x1 - x0, y1 - y0) <= min_close_distance


def dedupe_consecutive(stroke: list[Point]) -> list[Point]:
    """Drop consecutive duplicates, including the wrap-around pair."""
    out: list[Point] = []
    for p in stroke:
        if not out or p != out[-1]:
            out.append(p)
    if len(out) > 1 and out[0] == out[-1]:
        out.pop()
    return out


def _farthest_pair(pts: np.ndarray) -> tuple[int, int]:
    """Indices of a farthest-apart point pair (exact, via the convex hull)."""
    n = len(pts)
    if n <= 512:
        d2 = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
        i, j = divmod(int(d2.argmax()), n)
        return (i, j) if i < j else (j, i)
    hull = _convex_hull_indices(pts)
    hp = pts[hull]
    d2 = ((hp[:, None, :] - hp[None, :, :]) ** 2).sum(axis=2)
    a, b = divmod(int(d2.argmax()), len(hull))
    i, j = hull[a], hull[b]
    return (i, j) if i < j else (j, i)


def _convex_hull_indices(pts: np.ndarray) -> list[int]:
    """Andrew monotone chain; tolerates collinear input."""
    order = np.lexsort((pts[:, 1], pts[:, 0]))

    def cross(o, a, b):
        return (pts[a, 0] - pts[o, 0]) * (pts[b, 1] - pts[o, 1]) - (
            pts[a, 1] - pts[o, 1]
        ) * (pts[b, 0] - pts[o, 0])

    lower: list[int] = []
    for idx in order:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], idx) <= 0:
            lower.pop()
        lower.append(int(idx))
    upper: list[int] = []
    for idx in order[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], idx) <= 0:
            upper.pop()
        upper.append(int(idx))
    return lower[:-1] + upper[:-1]


def _segment_deviations(pts: np.ndarray, lo: int, hi: int) -> np.ndarray:
    """Distances of pts[lo+1:hi] from the chord pts[lo]-pts[hi]."""
    a, b = pts[lo], pts[hi]
    mid = pts[lo + 1 : hi]
    ab = b - a
    seg_len_sq = float(ab @ ab)
    if seg_len_sq == 0.0:
        return np.hypot(mid[:, 0] - a[0], mid[:, 1] - a[1])
    t = np.clip(((mid - a) @ ab) / seg_len_sq, 0.0, 1.0)
    proj = a + t[:, None] * ab
    return np.hypot(mid[:, 0] - proj[:, 0], mid[:, 1] - proj[:, 1])


def _douglas_peucker(pts: np.ndarray, epsilon: float) -> list[int]:
    """Kept indices for the open chain pts[0..n-1], endpoints always kept."""
    n = len(pts)
    keep = np.zeros(n, dtype=bool)
    keep[0] = keep[-1] = True
    stack = [(0, n - 1)]
    while stack:
        lo, hi = stack.pop()
        if hi - lo < 2:
            continue
        dev = _segment_deviations(pts, lo, hi)
        k = int(dev.argmax())
        if dev[k] > epsilon:
            split = lo + 1 + k
            keep[split] = True
            stack.append((lo, split))
            stack.append((split, hi))
    return [i for i in range(n) if keep[i]]


def simplify_stroke(stroke: list[Point], epsilon: float) -> Polygon:
    """Simplify a raw stroke into a polygon with adjustable precision.

    The ring is split at its two farthest-apart points so Douglas-Peucker has
    stable anchors; with ``epsilon`` 0 only collinear points are removed.
    Raises :class:`TooFewPoints` when fewer than 3 distinct points remain.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    points = dedupe_consecutive([(float(x), float(y)) for x, y in stroke])
    if len(points) < 3:
        raise TooFewPoints(f"stroke has {len(points)} distinct points, need 3")
    pts = np.asarray(points, dtype=float)
    n = len(pts)

    i, j = _farthest_pair(pts)
    # ring split into open chains i..j and j..i (indices mod n)
    chain1 = list(range(i, j + 1))
    chain2 = list(range(j, n)) + list(range(0, i + 1))

    kept: list[int] = []
    for chain in (chain1, chain2):
        sub = pts[chain]
        for local in _douglas_peucker(sub, epsilon)[:-1]:  # skip shared endpoint
            kept.append(chain[local])
    kept.sort()

    if len(kept) < 3:
        kept = _pad_degenerate(pts, kept)
    # a stroke may revisit a location non-consecutively; simplification can
    # then leave equal neighbours behind
    ring = dedupe_consecutive([points[k] for k in kept])
    if len(ring) < 3:
        raise TooFewPoints("stroke collapsed to a degenerate ring")
    if signed_ring_area(ring) < 0:
        ring = [ring[0]] + ring[:0:-1]
    return Polygon(tuple(ring))


def _pad_degenerate(pts: np.ndarray, kept: list[int]) -> list[int]:
    """Degenerate (collinear) ring collapsed below 3 vertices: re-add the
    most distant dropped point so the result is still a valid ring."""
    a, b = kept[0], kept[-1]
    best, best_d = None, -1.0
    for k in range(len(pts)):
        if k in kept:
            continue
        d = float(_segment_deviations(np.array([pts[a], pts[k], pts[b]]), 0, 2)[0])
        if d > best_d:
            best, best_d = k, d
    assert best is not None
    return sorted(kept + [best])
