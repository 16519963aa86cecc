/** Client-side hit-testing helpers. Authoritative geometry lives server-side;
 * these only decide what the cursor is over. */

import { isRle } from "./types.js";
import type { Annotation, Point, Segmentation } from "./types.js";

export function pointInFlatRing(p: Point, ring: number[]): boolean {
  let inside = false;
  const n = ring.length / 2;
  for (let i = 0, j = n - 1; i < n; j = i++) {
    const xi = ring[2 * i];
    const yi = ring[2 * i + 1];
    const xj = ring[2 * j];
    const yj = ring[2 * j + 1];
    if (yi > p.y !== yj > p.y) {
      const xCross = xi + ((p.y - yi) * (xj - xi)) / (yj - yi);
      if (p.x < xCross) inside = !inside;
    }
  }
  return inside;
}

export function pointInSegmentation(
  p: Point,
  seg: Segmentation | undefined,
  bbox?: [number, number, number, number],
): boolean {
  if (isRle(seg) || seg === undefined) {
    // raster masks hit-test via their bbox; good enough for hover/targeting
    if (!bbox) return false;
    const [x, y, w, h] = bbox;
    return p.x >= x && p.x <= x + w && p.y >= y && p.y <= y + h;
  }
  let crossings = 0;
  for (const ring of seg) {
    if (pointInFlatRing(p, ring)) crossings++;
  }
  return crossings % 2 === 1;
}

export function pointInAnnotation(p: Point, ann: Annotation): boolean {
  if (ann.segmentation !== undefined && !(Array.isArray(ann.segmentation) && ann.segmentation.length === 0)) {
    return pointInSegmentation(p, ann.segmentation, ann.bbox);
  }
  if (ann.bbox) {
    const [x, y, w, h] = ann.bbox;
    return p.x >= x && p.x <= x + w && p.y >= y && p.y <= y + h;
  }
  return false;
}

export function distance(a: Point, b: Point): number {
  return Math.hypot(a.x - b.x, a.y - b.y);
}

/** Index of the keypoint within `tolerance` of p, or -1. */
export function nearestKeypoint(
  p: Point,
  keypoints: number[] | undefined,
  tolerance: number,
): number {
  if (!keypoints) return -1;
  let best = -1;
  let bestDist = tolerance;
  for (let i = 0; i * 3 < keypoints.length; i++) {
    const d = distance(p, { x: keypoints[3 * i], y: keypoints[3 * i + 1] });
    if (d <= bestDist) {
      best = i;
      bestDist = d;
    }
  }
  return best;
}

/** Locate the polygon vertex within `tolerance` of p: [ringIndex, vertexIndex]. */
export function nearestVertex(
  p: Point,
  seg: Segmentation | undefined,
  tolerance: number,
): [number, number] | null {
  if (!seg || isRle(seg)) return null;
  let best: [number, number] | null = null;
  let bestDist = tolerance;
  seg.forEach((ring, ringIndex) => {
    for (let i = 0; i * 2 < ring.length; i++) {
      const d = distance(p, { x: ring[2 * i], y: ring[2 * i + 1] });
      if (d <= bestDist) {
        best = [ringIndex, i];
        bestDist = d;
      }
    }
  });
  return best;
}
