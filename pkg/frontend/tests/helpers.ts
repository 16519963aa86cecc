/** Shared test plumbing: stack access, controllers with stub sinks,
 * request-recording fetch, and pointer-gesture scripts. */

import { readFileSync } from "node:fs";
import { ApiClient, type FetchLike } from "../src/api.js";
import { AnnotationController, type UiSink } from "../src/controller.js";
import { ToolState } from "../src/tools.js";
import { CanvasView } from "../src/view.js";
import type { Point } from "../src/types.js";
import { STACK_FILE } from "./globalSetup.js";

export interface StackInfo {
  api: string;
  mock: string;
  dataset: string;
  images: number[];
  split_image: number;
  root: string;
}

export function stack(): StackInfo {
  return JSON.parse(readFileSync(STACK_FILE, "utf-8")) as StackInfo;
}

export interface RecordedRequest {
  method: string;
  url: string;
  body: unknown;
}

export function recordingFetch(log: RecordedRequest[]): FetchLike {
  return (url, init) => {
    log.push({
      method: init?.method ?? "GET",
      url: String(url),
      body: init?.body ? JSON.parse(String(init.body)) : undefined,
    });
    return fetch(url, init);
  };
}

export class StubSink implements UiSink {
  hints: string[] = [];
  toolChanges = 0;
  selections: (number | null)[] = [];
  hovered: (number | null)[] = [];
  renders = 0;
  private nextPoint = 0;
  pointNames: (string | null)[] = [];

  annotationsChanged(): void {
    this.renders += 1;
  }

  toolChanged(): void {
    this.toolChanges += 1;
  }

  selectionChanged(id: number | null): void {
    this.selections.push(id);
  }

  hoverChanged(id: number | null): void {
    this.hovered.push(id);
  }

  hint(message: string): void {
    this.hints.push(message);
  }

  choosePointName(): string | null {
    if (this.pointNames.length) return this.pointNames.shift()!;
    this.nextPoint += 1;
    return `p${this.nextPoint}`;
  }
}

let userCounter = 0;

export async function freshUser(api: ApiClient): Promise<number> {
  userCounter += 1;
  const user = await api.createUser({
    username: `ui_test_${process.pid}_${Date.now()}_${userCounter}`,
  });
  return user.id;
}

export interface Rig {
  api: ApiClient;
  controller: AnnotationController;
  sink: StubSink;
  tools: ToolState;
  view: CanvasView;
  userId: number;
  imageId: number;
  requests: RecordedRequest[];
}

/** Fresh user + controller opened on a seeded image (default: the two-tone
 * fixture; pass an index into stack().images for a solid generated one). */
export async function makeRig(imageIndex: number | "split" = "split"): Promise<Rig> {
  const info = stack();
  const imageId =
    imageIndex === "split" ? info.split_image : info.images[imageIndex];
  const requests: RecordedRequest[] = [];
  const api = new ApiClient(info.api, { fetchFn: recordingFetch(requests) });
  const userId = await freshUser(api);
  const sink = new StubSink();
  const tools = new ToolState();
  const view = new CanvasView();
  const controller = new AnnotationController(api, view, tools, sink, userId);
  controller.categoryId = 1;
  await controller.openImage(imageId);
  return { api, controller, sink, tools, view, userId, imageId, requests };
}

/** press -> move* -> release, in screen coordinates. */
export async function dragGesture(
  rig: Rig,
  points: Point[],
  shift = false,
): Promise<void> {
  rig.controller.pointerDown({ ...points[0], shift });
  for (const p of points.slice(1, -1)) {
    rig.controller.pointerMove({ ...p, shift });
  }
  await rig.controller.pointerUp({ ...points[points.length - 1], shift });
}

export async function clickAt(rig: Rig, p: Point, shift = false): Promise<void> {
  rig.controller.pointerDown({ ...p, shift });
  await rig.controller.pointerUp({ ...p, shift });
}

export function toolRequests(rig: Rig): RecordedRequest[] {
  return rig.requests.filter((r) => r.url.endsWith("/tool"));
}
