/** Gesture-to-API controller for the annotation canvas.
 *
 * Pointer and keyboard events come in as screen coordinates; the controller
 * converts them through the view, runs the active tool's gesture logic, and
 * talks to the API.  It holds no authoritative state: every response upserts
 * the local annotation list, so reloading from the server reproduces the
 * rendered state exactly.  Tool requests are queued one at a time per image.
 */

import { ApiClient, ApiError } from "./api.js";
import {
  distance,
  nearestKeypoint,
  nearestVertex,
  pointInAnnotation,
} from "./geometry.js";
import { ToolState, applyShortcut } from "./tools.js";
import { CanvasView } from "./view.js";
import { isRle } from "./types.js";
import type { Annotation, LayerPayload, Point } from "./types.js";

export interface PointerInput extends Point {
  shift?: boolean;
}

/** What the DOM layer must provide; tests use simple stubs. */
export interface UiSink {
  annotationsChanged(annotations: Annotation[]): void;
  toolChanged(tools: ToolState): void;
  selectionChanged(id: number | null): void;
  hoverChanged(id: number | null): void;
  hint(message: string): void;
  /** Name for a newly placed keypoint; null cancels the placement. */
  choosePointName(taken: string[]): string | null;
}

const HIT_TOLERANCE_PX = 6; // screen pixels, divided by zoom for image space

interface VertexDrag {
  kind: "vertex";
  annotationId: number;
  ring: number;
  vertex: number;
  original: number[][];
  moved: boolean;
}

interface KeypointDrag {
  kind: "keypoint";
  annotationId: number;
  index: number;
  original: number[];
  moved: boolean;
}

type Drag = VertexDrag | KeypointDrag;

export class AnnotationController {
  annotations: Annotation[] = [];
  selectedId: number | null = null;
  hoverId: number | null = null;
  imageId = 0;
  categoryId = 1;

  private stroke: Point[] = [];
  private drag: Drag | null = null;
  private pendingEdgeStart: number | null = null;
  private queue: Promise<unknown> = Promise.resolve();

  constructor(
    readonly api: ApiClient,
    readonly view: CanvasView,
    readonly tools: ToolState,
    readonly sink: UiSink,
    readonly userId: number,
  ) {}

  // ---- lifecycle -----------------------------------------------------------

  async openImage(imageId: number): Promise<void> {
    this.imageId = imageId;
    this.selectedId = null;
    this.pendingEdgeStart = null;
    const layer = await this.api.layer(imageId, this.userId);
    this.setAnnotations(layer.annotations);
  }

  async closeImage(): Promise<void> {
    if (this.imageId) await this.api.closeImage(this.imageId, this.userId);
  }

  /** Re-fetch the layer; the server is the single source of truth. */
  async reload(): Promise<LayerPayload> {
    const layer = await this.api.layer(this.imageId, this.userId);
    this.setAnnotations(layer.annotations);
    return layer;
  }

  // ---- pointer gestures -------------------------------------------------------

  pointerDown(input: PointerInput): void {
    const p = this.view.toImage(input);
    const tool = this.tools.activeTool;
    if (tool === "freeform" || tool === "brush" || tool === "eraser") {
      this.stroke = [p];
    } else if (tool === "select") {
      this.beginSelectDrag(p);
    } else if (tool === "keypoint") {
      this.beginKeypointDrag(p);
    }
  }

  pointerMove(input: PointerInput): void {
    const p = this.view.toImage(input);
    if (this.stroke.length) {
      this.stroke.push(p);
      return;
    }
    if (this.drag) {
      this.moveDrag(p);
      return;
    }
    this.updateHover(p);
  }

  /** Finish a gesture; resolves when any resulting API call has settled. */
  pointerUp(input: PointerInput): Promise<void> {
    const p = this.view.toImage(input);
    const shift = !!input.shift;
    const tool = this.tools.activeTool;

    if (this.drag) {
      if (this.drag.moved) return this.finishDrag(p);
      this.drag = null; // a click, not a drag: fall through to tool handling
    }

    switch (tool) {
      case "freeform":
        return this.finishFreeform(p);
      case "brush":
        return this.finishBrush(p);
      case "eraser":
        return this.finishEraser(p);
      case "flood":
        this.stroke = [];
        return this.floodClick(p, shift);
      case "dextr":
        this.stroke = [];
        return this.dextrClick(p);
      case "keypoint":
        this.stroke = [];
        return this.keypointClick(p);
      case "select":
        this.stroke = [];
        this.selectAt(p);
        return Promise.resolve();
    }
  }

  hover(input: PointerInput): void {
    this.updateHover(this.view.toImage(input));
  }

  // ---- keyboard -----------------------------------------------------------------

  /** Tool shortcuts plus z for server-side undo. */
  keyPress(key: string): Promise<void> {
    if (key === "z") return this.undo();
    if (applyShortcut(this.tools, key)) {
      this.sink.toolChanged(this.tools);
    }
    return Promise.resolve();
  }

  // ---- API-calling actions ---------------------------------------------------------

  async undo(): Promise<void> {
    await this.enqueue(async () => {
      try {
        const layer = await this.api.undo(this.imageId, this.userId);
        this.setAnnotations(layer.annotations);
      } catch (error) {
        this.reportError("nothing to undo", error);
      }
    });
  }

  async autoAnnotate(): Promise<void> {
    await this.enqueue(async () => {
      try {
        const result = await this.api.autoAnnotate(this.imageId, this.userId);
        for (const ann of result.created) this.upsert(ann);
        this.sink.hint(`auto-annotate added ${result.created.length} objects`);
      } catch (error) {
        this.reportError("auto-annotate failed", error);
      }
    });
  }

  async deleteAnnotation(id: number): Promise<void> {
    await this.enqueue(async () => {
      await this.api.deleteAnnotation(this.imageId, this.userId, id);
      this.annotations = this.annotations.filter((a) => a.id !== id);
      if (this.selectedId === id) this.select(null);
      this.sink.annotationsChanged(this.annotations);
    });
  }

  /** Metadata dialog writes: label and poco fields. */
  async updateMetadata(
    id: number,
    patch: { category_id?: number; poco?: Record<string, unknown> },
  ): Promise<void> {
    const current = this.byId(id);
    if (!current) return;
    const body: Record<string, unknown> = {};
    if (patch.category_id !== undefined) body.category_id = patch.category_id;
    if (patch.poco !== undefined) body.poco = { ...current.poco, ...patch.poco };
    await this.enqueue(async () => {
      try {
        this.upsert(await this.api.patchAnnotation(this.imageId, this.userId, id, body));
      } catch (error) {
        this.reportError("metadata update failed", error);
        await this.reload(); // revert optimistic UI state
      }
    });
  }

  async toggleVisibility(annotationId: number, pointIndex: number): Promise<void> {
    const ann = this.byId(annotationId);
    if (!ann?.keypoints || pointIndex * 3 >= ann.keypoints.length) return;
    const keypoints = [...ann.keypoints];
    keypoints[3 * pointIndex + 2] = keypoints[3 * pointIndex + 2] === 2 ? 1 : 2;
    await this.enqueue(async () => {
      this.upsert(
        await this.api.patchAnnotation(this.imageId, this.userId, annotationId, {
          keypoints,
        }),
      );
    });
  }

  // ---- freeform ---------------------------------------------------------------------

  private finishFreeform(p: Point): Promise<void> {
    const stroke = [...this.stroke, p];
    this.stroke = [];
    if (stroke.length < 3) {
      this.sink.hint("stroke too short to form a polygon");
      return Promise.resolve();
    }
    // client-side mirror of the server's auto-close check
    if (distance(stroke[0], stroke[stroke.length - 1]) > this.tools.minCloseDistance) {
      this.sink.hint("release closer to the starting point to close the shape");
      return Promise.resolve();
    }
    return this.enqueue(async () => {
      try {
        const ann = await this.api.applyTool(this.imageId, this.userId, {
          tool: "freeform",
          stroke: stroke.map((q) => [q.x, q.y]),
          epsilon: this.tools.freeformEpsilon,
          min_close_distance: this.tools.minCloseDistance,
          category_id: this.categoryId,
        });
        this.upsert(ann);
        this.select(ann.id);
      } catch (error) {
        this.reportError("freeform tool failed", error);
      }
    });
  }

  // ---- flood ---------------------------------------------------------------------------

  private floodClick(p: Point, shift: boolean): Promise<void> {
    if (shift) {
      const target = this.hitTest(p);
      if (target === null) {
        this.sink.hint("shift-click removes flood area inside an annotation");
        return Promise.resolve();
      }
      return this.enqueue(async () => {
        try {
          this.upsert(
            await this.api.applyTool(this.imageId, this.userId, {
              tool: "erase",
              target_annotation_id: target,
              seed: [p.x, p.y],
              color_threshold: this.tools.floodThreshold,
              blur_sigma: this.tools.floodSigma,
            }),
          );
        } catch (error) {
          this.reportError("flood erase failed", error);
        }
      });
    }
    return this.enqueue(async () => {
      try {
        const ann = await this.api.applyTool(this.imageId, this.userId, {
          tool: "flood",
          seed: [p.x, p.y],
          color_threshold: this.tools.floodThreshold,
          blur_sigma: this.tools.floodSigma,
          category_id: this.categoryId,
        });
        this.upsert(ann);
        this.select(ann.id);
      } catch (error) {
        this.reportError("flood tool failed", error);
      }
    });
  }

  // ---- brush / eraser ----------------------------------------------------------------------

  private finishBrush(p: Point): Promise<void> {
    const path = [...this.stroke, p];
    this.stroke = [];
    const target = this.selectedId;
    return this.enqueue(async () => {
      try {
        const body: Record<string, unknown> = {
          tool: "brush",
          path: path.map((q) => [q.x, q.y]),
          radius: this.tools.brushRadius,
        };
        if (target !== null) body.target_annotation_id = target;
        else body.category_id = this.categoryId;
        const ann = await this.api.applyTool(this.imageId, this.userId, body);
        this.upsert(ann);
        this.select(ann.id);
      } catch (error) {
        this.reportError("brush tool failed", error);
      }
    });
  }

  private finishEraser(p: Point): Promise<void> {
    const path = [...this.stroke, p];
    this.stroke = [];
    const target = this.selectedId ?? this.hitTest(path[0]);
    if (target === null) {
      this.sink.hint("the eraser needs an annotation under the stroke");
      return Promise.resolve();
    }
    return this.enqueue(async () => {
      try {
        this.upsert(
          await this.api.applyTool(this.imageId, this.userId, {
            tool: "erase",
            target_annotation_id: target,
            path: path.map((q) => [q.x, q.y]),
            radius: this.tools.brushRadius,
          }),
        );
      } catch (error) {
        this.reportError("eraser failed", error);
      }
    });
  }

  // ---- dextr --------------------------------------------------------------------------------

  private dextrClick(p: Point): Promise<void> {
    this.tools.dextrPoints.push(p);
    this.sink.toolChanged(this.tools);
    if (this.tools.dextrPoints.length < 4) return Promise.resolve();
    const pts = this.tools.dextrPoints;
    this.tools.dextrPoints = [];
    const byX = [...pts].sort((a, b) => a.x - b.x);
    const byY = [...pts].sort((a, b) => a.y - b.y);
    return this.enqueue(async () => {
      try {
        const ann = await this.api.applyTool(this.imageId, this.userId, {
          tool: "dextr",
          points: {
            left: [byX[0].x, byX[0].y],
            right: [byX[3].x, byX[3].y],
            top: [byY[0].x, byY[0].y],
            bottom: [byY[3].x, byY[3].y],
          },
          padding: this.tools.dextrPadding,
          category_id: this.categoryId,
        });
        this.upsert(ann);
        this.select(ann.id);
      } catch (error) {
        this.reportError("assisted segmentation failed", error);
      } finally {
        this.sink.toolChanged(this.tools);
      }
    });
  }

  // ---- keypoints -------------------------------------------------------------------------------

  private beginKeypointDrag(p: Point): void {
    const ann = this.selectedId !== null ? this.byId(this.selectedId) : null;
    if (!ann?.keypoints) return;
    const index = nearestKeypoint(p, ann.keypoints, this.tolerance());
    if (index >= 0 && this.pendingEdgeStart === null) {
      this.drag = {
        kind: "keypoint",
        annotationId: ann.id,
        index,
        original: [...ann.keypoints],
        moved: false,
      };
    }
  }

  private keypointClick(p: Point): Promise<void> {
    const selected = this.selectedId !== null ? this.byId(this.selectedId) : null;
    const hitIndex = selected
      ? nearestKeypoint(p, selected.keypoints, this.tolerance())
      : -1;

    if (selected && hitIndex >= 0) {
      if (this.pendingEdgeStart === null) {
        this.pendingEdgeStart = hitIndex;
        this.sink.hint("click another point to connect them");
        return Promise.resolve();
      }
      const from = this.pendingEdgeStart;
      this.pendingEdgeStart = null;
      if (from === hitIndex) return Promise.resolve();
      return this.addSkeletonEdge(selected, from, hitIndex);
    }

    // empty spot: place a new point
    this.pendingEdgeStart = null;
    const taken = selected?.poco?.keypoint_names ?? [];
    const name = this.sink.choosePointName(taken);
    if (name === null) return Promise.resolve();
    if (!selected) {
      return this.enqueue(async () => {
        const ann = await this.api.createAnnotation(this.imageId, this.userId, {
          category_id: this.categoryId,
          keypoints: [p.x, p.y, 2],
          num_keypoints: 1,
          poco: { keypoint_names: [name] },
        });
        this.upsert(ann);
        this.select(ann.id);
      });
    }
    const keypoints = [...(selected.keypoints ?? []), p.x, p.y, 2];
    const names = [...taken, name];
    return this.enqueue(async () => {
      this.upsert(
        await this.api.patchAnnotation(this.imageId, this.userId, selected.id, {
          keypoints,
          num_keypoints: keypoints.length / 3,
          poco: { ...selected.poco, keypoint_names: names },
        }),
      );
    });
  }

  private addSkeletonEdge(ann: Annotation, from: number, to: number): Promise<void> {
    const skeleton: [number, number][] = [...(ann.poco?.skeleton ?? [])];
    const exists = skeleton.some(
      ([a, b]) => (a === from && b === to) || (a === to && b === from),
    );
    if (exists) return Promise.resolve(); // idempotent, silently kept single
    skeleton.push([from, to]);
    return this.enqueue(async () => {
      this.upsert(
        await this.api.patchAnnotation(this.imageId, this.userId, ann.id, {
          poco: { ...ann.poco, skeleton },
        }),
      );
    });
  }

  // ---- select tool and drags ----------------------------------------------------------------------

  private beginSelectDrag(p: Point): void {
    if (this.selectedId === null) return;
    const ann = this.byId(this.selectedId);
    if (!ann || !ann.segmentation || isRle(ann.segmentation)) return;
    const hit = nearestVertex(p, ann.segmentation, this.tolerance());
    if (hit) {
      this.drag = {
        kind: "vertex",
        annotationId: ann.id,
        ring: hit[0],
        vertex: hit[1],
        original: ann.segmentation.map((ring) => [...ring]),
        moved: false,
      };
    }
  }

  /** Vertex and keypoint drags render live; the PATCH happens on drop. */
  private moveDrag(p: Point): void {
    const drag = this.drag!;
    drag.moved = true;
    const ann = this.byId(drag.annotationId);
    if (!ann) return;
    if (drag.kind === "vertex" && Array.isArray(ann.segmentation)) {
      ann.segmentation[drag.ring][2 * drag.vertex] = p.x;
      ann.segmentation[drag.ring][2 * drag.vertex + 1] = p.y;
    } else if (drag.kind === "keypoint" && ann.keypoints) {
      ann.keypoints[3 * drag.index] = p.x;
      ann.keypoints[3 * drag.index + 1] = p.y;
    }
    this.sink.annotationsChanged(this.annotations);
  }

  private finishDrag(p: Point): Promise<void> {
    const drag = this.drag!;
    this.drag = null;
    this.moveDragFinal(drag, p);
    const ann = this.byId(drag.annotationId);
    if (!ann) return Promise.resolve();
    return this.enqueue(async () => {
      try {
        if (drag.kind === "vertex") {
          this.upsert(
            await this.api.patchAnnotation(this.imageId, this.userId, ann.id, {
              segmentation: ann.segmentation,
            }),
          );
        } else {
          this.upsert(
            await this.api.patchAnnotation(this.imageId, this.userId, ann.id, {
              keypoints: ann.keypoints,
            }),
          );
        }
      } catch (error) {
        // failed PATCH reverts the optimistic drag
        if (drag.kind === "vertex") ann.segmentation = drag.original;
        else ann.keypoints = drag.original;
        this.sink.annotationsChanged(this.annotations);
        this.reportError("saving the drag failed", error);
      }
    });
  }

  private moveDragFinal(drag: Drag, p: Point): void {
    const ann = this.byId(drag.annotationId);
    if (!ann) return;
    if (drag.kind === "vertex" && Array.isArray(ann.segmentation)) {
      ann.segmentation[drag.ring][2 * drag.vertex] = p.x;
      ann.segmentation[drag.ring][2 * drag.vertex + 1] = p.y;
    } else if (drag.kind === "keypoint" && ann.keypoints) {
      ann.keypoints[3 * drag.index] = p.x;
      ann.keypoints[3 * drag.index + 1] = p.y;
    }
  }

  private selectAt(p: Point): void {
    this.select(this.hitTest(p));
  }

  // ---- shared state helpers ----------------------------------------------------------------------

  select(id: number | null): void {
    this.selectedId = id;
    this.pendingEdgeStart = null;
    this.sink.selectionChanged(id);
  }

  hitTest(p: Point): number | null {
    // topmost (most recent) annotation wins
    for (let i = this.annotations.length - 1; i >= 0; i--) {
      if (pointInAnnotation(p, this.annotations[i])) return this.annotations[i].id;
    }
    return null;
  }

  byId(id: number): Annotation | undefined {
    return this.annotations.find((a) => a.id === id);
  }

  private tolerance(): number {
    return HIT_TOLERANCE_PX / this.view.zoom;
  }

  private updateHover(p: Point): void {
    const id = this.hitTest(p);
    if (id !== this.hoverId) {
      this.hoverId = id;
      this.sink.hoverChanged(id);
    }
  }

  private setAnnotations(annotations: Annotation[]): void {
    this.annotations = annotations;
    if (this.selectedId !== null && !this.byId(this.selectedId)) {
      this.select(null);
    }
    this.sink.annotationsChanged(this.annotations);
  }

  private upsert(ann: Annotation): void {
    const index = this.annotations.findIndex((a) => a.id === ann.id);
    if (index >= 0) this.annotations[index] = ann;
    else this.annotations.push(ann);
    this.sink.annotationsChanged(this.annotations);
  }

  /** Chain API work so at most one tool request is in flight per view. */
  private enqueue<T>(task: () => Promise<T>): Promise<void> {
    const next = this.queue.then(task).then(() => undefined);
    this.queue = next.catch(() => undefined);
    return next;
  }

  private reportError(prefix: string, error: unknown): void {
    const message =
      error instanceof ApiError ? `${prefix}: ${error.message}` : `${prefix}`;
    this.sink.hint(message);
  }
}
