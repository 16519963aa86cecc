/** Canvas rendering of the image, annotations, keypoints, and tool overlays. */

import { isRle } from "./types.js";
import type { Annotation, Point } from "./types.js";
import type { CanvasView } from "./view.js";
import type { ToolState } from "./tools.js";

const PALETTE = [
  "#e6553a", "#3a8ee6", "#46b96e", "#d9a21b", "#9a5fe0", "#e05fa9",
  "#5fd7e0", "#a9e05f",
];

export function colorFor(categoryId: number): string {
  return PALETTE[Math.abs(categoryId) % PALETTE.length];
}

export class CanvasRenderer {
  private image: HTMLImageElement | null = null;

  constructor(
    private readonly canvas: HTMLCanvasElement,
    private readonly view: CanvasView,
  ) {}

  setImage(url: string, onReady: () => void): void {
    const img = new Image();
    img.onload = () => {
      this.image = img;
      this.view.fit(img.width, img.height, this.canvas.width, this.canvas.height);
      onReady();
    };
    img.src = url;
  }

  get imageSize(): { width: number; height: number } | null {
    return this.image ? { width: this.image.width, height: this.image.height } : null;
  }

  draw(
    annotations: Annotation[],
    state: { selectedId: number | null; hoverId: number | null; tools: ToolState },
    overlayStroke: Point[] = [],
  ): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    ctx.setTransform(1, 0, 0, 1, 0, 0);
    ctx.fillStyle = "#202228";
    ctx.fillRect(0, 0, this.canvas.width, this.canvas.height);

    const { zoom } = this.view;
    const pan = this.view.pan;
    ctx.setTransform(zoom, 0, 0, zoom, pan.x, pan.y);
    if (this.image) ctx.drawImage(this.image, 0, 0);

    for (const ann of annotations) {
      const emphasized = ann.id === state.selectedId || ann.id === state.hoverId;
      this.drawAnnotation(ctx, ann, emphasized, zoom);
    }

    if (overlayStroke.length > 1) {
      ctx.strokeStyle = "#ffffff";
      ctx.lineWidth = 1.5 / zoom;
      ctx.beginPath();
      overlayStroke.forEach((p, i) => (i ? ctx.lineTo(p.x, p.y) : ctx.moveTo(p.x, p.y)));
      ctx.stroke();
    }
    for (const p of state.tools.dextrPoints) {
      this.drawMarker(ctx, p, "#ffd23a", zoom);
    }
  }

  private drawAnnotation(
    ctx: CanvasRenderingContext2D,
    ann: Annotation,
    emphasized: boolean,
    zoom: number,
  ): void {
    const color = colorFor(ann.category_id);
    ctx.lineWidth = (emphasized ? 2.5 : 1.25) / zoom;
    ctx.strokeStyle = color;
    ctx.fillStyle = color + (emphasized ? "55" : "2e");

    const seg = ann.segmentation;
    if (seg && !isRle(seg)) {
      for (const ring of seg) {
        ctx.beginPath();
        for (let i = 0; i * 2 < ring.length; i++) {
          const x = ring[2 * i];
          const y = ring[2 * i + 1];
          i ? ctx.lineTo(x, y) : ctx.moveTo(x, y);
        }
        ctx.closePath();
        ctx.fill();
        ctx.stroke();
        if (emphasized) {
          for (let i = 0; i * 2 < ring.length; i++) {
            this.drawMarker(ctx, { x: ring[2 * i], y: ring[2 * i + 1] }, color, zoom);
          }
        }
      }
    } else if (ann.bbox) {
      const [x, y, w, h] = ann.bbox;
      ctx.strokeRect(x, y, w, h);
    }

    if (ann.keypoints) {
      const skeleton = ann.poco?.skeleton ?? [];
      ctx.lineWidth = 1.5 / zoom;
      for (const [a, b] of skeleton) {
        ctx.beginPath();
        ctx.moveTo(ann.keypoints[3 * a], ann.keypoints[3 * a + 1]);
        ctx.lineTo(ann.keypoints[3 * b], ann.keypoints[3 * b + 1]);
        ctx.stroke();
      }
      for (let i = 0; i * 3 < ann.keypoints.length; i++) {
        const visible = ann.keypoints[3 * i + 2] === 2;
        this.drawMarker(
          ctx,
          { x: ann.keypoints[3 * i], y: ann.keypoints[3 * i + 1] },
          visible ? color : "#888888",
          zoom,
        );
      }
    }
  }

  private drawMarker(
    ctx: CanvasRenderingContext2D,
    p: Point,
    color: string,
    zoom: number,
  ): void {
    ctx.beginPath();
    ctx.arc(p.x, p.y, 3.5 / zoom, 0, Math.PI * 2);
    ctx.fillStyle = color;
    ctx.fill();
    ctx.strokeStyle = "#101010";
    ctx.lineWidth = 1 / zoom;
    ctx.stroke();
  }
}
