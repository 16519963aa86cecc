/** Tool selection state, slider-bounded parameters, keyboard shortcuts. */

import type { Point } from "./types.js";

export type ToolName =
  | "select"
  | "freeform"
  | "flood"
  | "brush"
  | "eraser"
  | "keypoint"
  | "dextr";

export const TOOLS: ToolName[] = [
  "select",
  "freeform",
  "flood",
  "brush",
  "eraser",
  "keypoint",
  "dextr",
];

interface Range {
  min: number;
  max: number;
}

export const LIMITS = {
  brushRadius: { min: 1, max: 64 } as Range,
  floodThreshold: { min: 0, max: 255 } as Range,
  floodSigma: { min: 0, max: 8 } as Range,
  freeformEpsilon: { min: 0, max: 10 } as Range,
  minCloseDistance: { min: 0, max: 50 } as Range,
  dextrPadding: { min: 0, max: 100 } as Range,
};

const clamp = (value: number, range: Range) =>
  Math.min(range.max, Math.max(range.min, value));

export class ToolState {
  activeTool: ToolName = "select";
  brushRadius = 8;
  floodThreshold = 10;
  floodSigma = 0;
  freeformEpsilon = 1;
  minCloseDistance = 10;
  dextrPadding = 10;
  /** collected extreme-point clicks, up to 4; the 4th fires the request */
  dextrPoints: Point[] = [];

  setTool(tool: ToolName): void {
    this.activeTool = tool;
    this.dextrPoints = [];
  }

  setBrushRadius(value: number): void {
    this.brushRadius = clamp(value, LIMITS.brushRadius);
  }

  setFloodThreshold(value: number): void {
    this.floodThreshold = clamp(value, LIMITS.floodThreshold);
  }

  setFloodSigma(value: number): void {
    this.floodSigma = clamp(value, LIMITS.floodSigma);
  }

  setFreeformEpsilon(value: number): void {
    this.freeformEpsilon = clamp(value, LIMITS.freeformEpsilon);
  }

  setMinCloseDistance(value: number): void {
    this.minCloseDistance = clamp(value, LIMITS.minCloseDistance);
  }

  setDextrPadding(value: number): void {
    this.dextrPadding = clamp(value, LIMITS.dextrPadding);
  }
}

/** One keystroke -> exactly one ToolState transition. */
export const SHORTCUTS: Record<string, (state: ToolState) => void> = {
  v: (s) => s.setTool("select"),
  p: (s) => s.setTool("freeform"),
  f: (s) => s.setTool("flood"),
  b: (s) => s.setTool("brush"),
  e: (s) => s.setTool("eraser"),
  k: (s) => s.setTool("keypoint"),
  d: (s) => s.setTool("dextr"),
  "[": (s) => s.setBrushRadius(s.brushRadius - 2),
  "]": (s) => s.setBrushRadius(s.brushRadius + 2),
};

/** Apply a shortcut; returns whether the key was bound. */
export function applyShortcut(state: ToolState, key: string): boolean {
  const action = SHORTCUTS[key];
  if (!action) return false;
  action(state);
  return true;
}
