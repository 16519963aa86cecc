/** Application bootstrap: dataset grid -> annotation view wiring. */

import { ApiClient } from "./api.js";
import { CanvasRenderer } from "./canvas.js";
import { AnnotationController, type UiSink } from "./controller.js";
import { Sidebar } from "./sidebar.js";
import { ToolState, TOOLS, type ToolName } from "./tools.js";
import { CanvasView } from "./view.js";
import type { Annotation, DatasetInfo, ImageInfo } from "./types.js";

const params = new URLSearchParams(window.location.search);
const apiBase = params.get("api") ?? "http://127.0.0.1:8440";
const userId = Number(params.get("user") ?? "1");
const api = new ApiClient(apiBase);

const app = document.getElementById("app")!;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

async function showDatasetGrid(): Promise<void> {
  app.replaceChildren();
  const datasets = await api.listDatasets();
  const title = el("h2", "", "Datasets");
  app.appendChild(title);
  for (const dataset of datasets) {
    const section = el("div", "dataset-section");
    section.appendChild(el("h3", "", dataset.name));
    const grid = el("div", "image-grid");
    section.appendChild(grid);
    app.appendChild(section);
    const images = await api.images(dataset.name, userId);
    for (const image of images) {
      grid.appendChild(imageCard(dataset, image));
    }
  }
}

function imageCard(dataset: DatasetInfo, image: ImageInfo): HTMLElement {
  const card = el("div", "image-card");
  const thumb = el("div", "thumb");
  const img = document.createElement("img");
  img.src = api.imageFileUrl(image.id);
  img.alt = image.file_name;
  thumb.appendChild(img);
  card.appendChild(thumb);
  card.appendChild(el("div", "file-name", image.file_name));
  card.appendChild(
    el("div", "count-note", `${image.annotation_count ?? 0} objects annotated`),
  );
  card.addEventListener("click", () => void showAnnotationView(dataset, image));
  return card;
}

async function showAnnotationView(dataset: DatasetInfo, image: ImageInfo): Promise<void> {
  app.replaceChildren();

  const layout = el("div", "annotation-layout");
  const toolbar = el("div", "toolbar");
  const center = el("div", "canvas-pane");
  const side = el("div", "sidebar");
  layout.append(toolbar, center, side);
  app.appendChild(layout);

  const canvas = document.createElement("canvas");
  canvas.width = 960;
  canvas.height = 640;
  center.appendChild(canvas);
  const hintBar = el("div", "hint-bar");
  center.appendChild(hintBar);
  const tooltip = el("div", "tooltip");
  tooltip.style.display = "none";
  center.appendChild(tooltip);

  const view = new CanvasView();
  const tools = new ToolState();
  const renderer = new CanvasRenderer(canvas, view);

  let sidebar: Sidebar;
  const sink: UiSink = {
    annotationsChanged(annotations: Annotation[]) {
      sidebar?.render(annotations, controller.selectedId);
      redraw();
    },
    toolChanged() {
      markActiveTool();
      redraw();
    },
    selectionChanged() {
      sidebar?.render(controller.annotations, controller.selectedId);
      redraw();
    },
    hoverChanged(id: number | null) {
      if (id === null) {
        tooltip.style.display = "none";
      } else {
        const ann = controller.byId(id);
        if (ann) {
          tooltip.textContent = sidebar.tooltipText(ann);
          tooltip.style.display = "block";
        }
      }
      redraw();
    },
    hint(message: string) {
      hintBar.textContent = message;
      window.setTimeout(() => {
        if (hintBar.textContent === message) hintBar.textContent = "";
      }, 4000);
    },
    choosePointName(taken: string[]) {
      return window.prompt(`keypoint name (existing: ${taken.join(", ") || "none"})`);
    },
  };

  const controller = new AnnotationController(api, view, tools, sink, userId);
  controller.categoryId = dataset.categories[0]?.id ?? 1;
  sidebar = new Sidebar(side, dataset.categories, controller);

  const liveStroke: { points: { x: number; y: number }[] } = { points: [] };
  function redraw(): void {
    renderer.draw(
      controller.annotations,
      { selectedId: controller.selectedId, hoverId: controller.hoverId, tools },
      liveStroke.points,
    );
  }

  // toolbar: icons on the left select the labeling technique
  const toolGlyphs: Record<ToolName, string> = {
    select: "↖", freeform: "✎", flood: "◉", brush: "●",
    eraser: "␡", keypoint: "•", dextr: "⌖",
  };
  const toolButtons = new Map<ToolName, HTMLButtonElement>();
  for (const tool of TOOLS) {
    const button = el("button", "tool-button", toolGlyphs[tool]);
    button.title = tool;
    button.addEventListener("click", () => {
      tools.setTool(tool);
      sink.toolChanged(tools);
    });
    toolbar.appendChild(button);
    toolButtons.set(tool, button);
  }
  const autoButton = el("button", "tool-button auto", "auto");
  autoButton.title = "auto-annotate (model assisted)";
  autoButton.addEventListener("click", () => void controller.autoAnnotate());
  toolbar.appendChild(autoButton);
  const undoButton = el("button", "tool-button", "↶");
  undoButton.title = "undo (z)";
  undoButton.addEventListener("click", () => void controller.undo());
  toolbar.appendChild(undoButton);
  const backButton = el("button", "tool-button", "⌂");
  backButton.title = "back to dataset grid";
  backButton.addEventListener("click", () => {
    void controller.closeImage().then(showDatasetGrid);
  });
  toolbar.appendChild(backButton);

  function markActiveTool(): void {
    for (const [tool, button] of toolButtons) {
      button.classList.toggle("active", tools.activeTool === tool);
    }
  }

  // pointer wiring; wheel zooms around the cursor, middle-drag pans
  let pointerActive = false;
  let panning: { x: number; y: number } | null = null;
  canvas.addEventListener("pointerdown", (event) => {
    const point = eventPoint(event);
    if (event.button === 1) {
      panning = point;
      return;
    }
    pointerActive = true;
    liveStroke.points = [view.toImage(point)];
    controller.pointerDown({ ...point, shift: event.shiftKey });
  });
  canvas.addEventListener("pointermove", (event) => {
    const point = eventPoint(event);
    tooltip.style.left = `${point.x + 14}px`;
    tooltip.style.top = `${point.y + 14}px`;
    if (panning) {
      view.panBy(point.x - panning.x, point.y - panning.y);
      panning = point;
      redraw();
      return;
    }
    if (pointerActive) liveStroke.points.push(view.toImage(point));
    controller.pointerMove({ ...point, shift: event.shiftKey });
    redraw();
  });
  canvas.addEventListener("pointerup", (event) => {
    const point = eventPoint(event);
    if (panning) {
      panning = null;
      return;
    }
    pointerActive = false;
    liveStroke.points = [];
    void controller.pointerUp({ ...point, shift: event.shiftKey });
  });
  canvas.addEventListener("wheel", (event) => {
    event.preventDefault();
    view.zoomBy(event.deltaY < 0 ? 1.15 : 1 / 1.15, eventPoint(event));
    redraw();
  });
  window.addEventListener("keydown", (event) => {
    if (event.target instanceof HTMLInputElement) return;
    void controller.keyPress(event.key);
  });

  function eventPoint(event: MouseEvent): { x: number; y: number } {
    const rect = canvas.getBoundingClientRect();
    return { x: event.clientX - rect.left, y: event.clientY - rect.top };
  }

  renderer.setImage(api.imageFileUrl(image.id), redraw);
  await controller.openImage(image.id);
  markActiveTool();
}

void showDatasetGrid().catch((error) => {
  app.replaceChildren(
    el("p", "error", `cannot reach the API at ${apiBase}: ${error}`),
  );
});
