"""Binary mask -> region boundary extraction.

Boundaries are traced along pixel edges at integer corner coordinates, so
``rasterize(trace_contours(m), w, h)`` reproduces ``m`` bit-exactly.  Each
set pixel contributes one directed unit edge per exposed side, oriented so
that a full loop around foreground has positive shoelace area (exterior)
and a loop around background inside it comes out negative (hole).  At a
checkerboard corner the walk turns so that diagonally-touching foreground
pixels stay in separate rings (4-connected foreground).
"""

from __future__ import annotations

import numpy as np

from .primitives import Polygon, Region
from .raster import Mask


def _boundary_edges(mask: Mask) -> dict[tuple[int, int], list[tuple[int, int]]]:
    """Directed unit edges start -> [ends], interior kept on the ring's inside."""
    h, w = mask.shape
    padded = np.zeros((h + 2, w + 2), dtype=bool)
    padded[1:-1, 1:-1] = mask

    edges: dict[tuple[int, int], list[tuple[int, int]]] = {}

    def add(rows, cols, d_start, d_end):
        for r, c in zip(rows.tolist(), cols.tolist()):
            start = (c + d_start[0], r + d_start[1])
            edges.setdefault(start, []).append((c + d_end[0], r + d_end[1]))

    inner = padded[1:-1, 1:-1]
    top = inner & ~padded[:-2, 1:-1]
    right = inner & ~padded[1:-1, 2:]
    bottom = inner & ~padded[2:, 1:-1]
    left = inner & ~padded[1:-1, :-2]

    add(*np.nonzero(top), (0, 0), (1, 0))
    add(*np.nonzero(right), (1, 0), (1, 1))
    add(*np.nonzero(bottom), (1, 1), (0, 1))
    add(*np.nonzero(left), (0, 1), (0, 0))
    return edges


def trace_contours(mask: Mask) -> Region:
    """Extract all boundary rings of a mask as a region with holes."""
    edges = _boundary_edges(mask)
    shells: list[Polygon] = []
    holes: list[Polygon] = []

    for start in sorted(edges):
        while edges.get(start):
            ring = _walk_loop(edges, start)
            ring = _drop_collinear(ring)
            poly = Polygon(tuple((float(x), float(y)) for x, y in ring))
            if poly.signed_area > 0:
                shells.append(poly)
            else:
                holes.append(poly)
    return Region(tuple(shells), tuple(holes))


def _walk_loop(edges, start):
    ring = [start]
    prev = start
    current = edges[start].pop()
    if not edges[start]:
        del edges[start]
    while current != start:
        ring.append(current)
        outgoing = edges[current]
        if len(outgoing) == 1:
            nxt = outgoing.pop()
        else:
            # saddle vertex: turn right (d -> (-dy, dx)) to stay on the ring
            # of the pixel we are already tracing
            d = (current[0] - prev[0], current[1] - prev[1])
            want = (current[0] - d[1], current[1] + d[0])
            nxt = want if want in outgoing else outgoing[0]
            outgoing.remove(nxt)
        if not outgoing:
            del edges[current]
        prev, current = current, nxt
    return ring


def _drop_collinear(ring):
    out = []
    n = len(ring)
    for i in range(n):
        p_prev, p, p_next = ring[i - 1], ring[i], ring[(i + 1) % n]
        d1 = (p[0] - p_prev[0], p[1] - p_prev[1])
        d2 = (p_next[0] - p[0], p_next[1] - p[1])
        if d1[0] * d2[1] - d1[1] * d2[0] != 0:
            out.append(p)
    return out
