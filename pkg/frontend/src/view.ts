/** Canvas viewport: zoom/pan and the screen <-> image coordinate mapping.
 *
 * Image pixel space is authoritative; every payload sent to the API uses it,
 * so tool behaviour is invariant under any zoom or pan.
 */

import type { Point } from "./types.js";

const MIN_ZOOM = 0.05;
const MAX_ZOOM = 64;

export class CanvasView {
  private _zoom = 1;
  private _panX = 0;
  private _panY = 0;

  get zoom(): number {
    return this._zoom;
  }

  get pan(): Point {
    return { x: this._panX, y: this._panY };
  }

  /** screen = image * zoom + pan */
  toScreen(p: Point): Point {
    return { x: p.x * this._zoom + this._panX, y: p.y * this._zoom + this._panY };
  }

  toImage(s: Point): Point {
    return {
      x: (s.x - this._panX) / this._zoom,
      y: (s.y - this._panY) / this._zoom,
    };
  }

  /** Set zoom, keeping the given screen point fixed on the same image point. */
  setZoom(zoom: number, anchor?: Point): void {
    const next = Math.min(MAX_ZOOM, Math.max(MIN_ZOOM, zoom));
    if (anchor) {
      const pivot = this.toImage(anchor);
      this._zoom = next;
      this._panX = anchor.x - pivot.x * next;
      this._panY = anchor.y - pivot.y * next;
    } else {
      this._zoom = next;
    }
  }

  zoomBy(factor: number, anchor?: Point): void {
    this.setZoom(this._zoom * factor, anchor);
  }

  panBy(dx: number, dy: number): void {
    this._panX += dx;
    this._panY += dy;
  }

  reset(): void {
    this._zoom = 1;
    this._panX = 0;
    this._panY = 0;
  }

  /** Fit an image of the given size into a viewport, centered. */
  fit(imageWidth: number, imageHeight: number, viewWidth: number, viewHeight: number): void {
    const scale = Math.min(viewWidth / imageWidth, viewHeight / imageHeight);
    this.setZoom(scale);
    this._panX = (viewWidth - imageWidth * this._zoom) / 2;
    this._panY = (viewHeight - imageHeight * this._zoom) / 2;
  }
}
