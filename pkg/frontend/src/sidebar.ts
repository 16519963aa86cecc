/** Annotation sidebar: list entries, hover metadata, edit dialog, delete. */

import type { Annotation, CategoryInfo } from "./types.js";
import type { AnnotationController } from "./controller.js";
import { colorFor } from "./canvas.js";

export class Sidebar {
  constructor(
    private readonly root: HTMLElement,
    private readonly categories: CategoryInfo[],
    private readonly controller: AnnotationController,
  ) {}

  categoryName(id: number): string {
    return this.categories.find((c) => c.id === id)?.name ?? `category ${id}`;
  }

  render(annotations: Annotation[], selectedId: number | null): void {
    this.root.replaceChildren();
    const header = document.createElement("h3");
    header.textContent = `Annotations (${annotations.length})`;
    this.root.appendChild(header);

    for (const ann of annotations) {
      const row = document.createElement("div");
      row.className = "annotation-row" + (ann.id === selectedId ? " selected" : "");
      row.dataset.annotationId = String(ann.id);

      const swatch = document.createElement("span");
      swatch.className = "swatch";
      swatch.style.background = colorFor(ann.category_id);
      row.appendChild(swatch);

      const label = document.createElement("span");
      label.className = "label";
      label.textContent = `#${ann.id} ${this.categoryName(ann.category_id)}`;
      row.appendChild(label);

      const meta = document.createElement("span");
      meta.className = "meta";
      meta.textContent = this.metadataSummary(ann);
      row.appendChild(meta);

      const del = document.createElement("button");
      del.textContent = "×";
      del.title = "delete annotation";
      del.addEventListener("click", (event) => {
        event.stopPropagation();
        void this.controller.deleteAnnotation(ann.id);
      });
      row.appendChild(del);

      row.addEventListener("click", () => this.controller.select(ann.id));
      row.addEventListener("dblclick", () => this.editDialog(ann));
      this.root.appendChild(row);
    }
  }

  metadataSummary(ann: Annotation): string {
    const parts: string[] = [];
    if (ann.poco?.maturity_stage) parts.push(String(ann.poco.maturity_stage));
    if (ann.poco?.plant_id !== undefined) parts.push(`plant ${ann.poco.plant_id}`);
    if (ann.area !== undefined) parts.push(`${Math.round(ann.area)} px²`);
    return parts.join(" · ");
  }

  tooltipText(ann: Annotation): string {
    const lines = [`${this.categoryName(ann.category_id)} (#${ann.id})`];
    const poco = ann.poco ?? {};
    for (const [key, value] of Object.entries(poco)) {
      if (key === "skeleton" || key === "keypoint_names") continue;
      lines.push(`${key}: ${JSON.stringify(value)}`);
    }
    return lines.join("\n");
  }

  /** Double-click dialog: edit label and poco metadata with window prompts. */
  private editDialog(ann: Annotation): void {
    const names = this.categories.map((c) => c.name).join(", ");
    const category = window.prompt(`category (${names})`, this.categoryName(ann.category_id));
    const patch: { category_id?: number; poco?: Record<string, unknown> } = {};
    if (category) {
      const match = this.categories.find((c) => c.name === category.trim());
      if (match && match.id !== ann.category_id) patch.category_id = match.id;
    }
    const maturity = window.prompt(
      "maturity_stage (empty to keep)",
      String(ann.poco?.maturity_stage ?? ""),
    );
    const plant = window.prompt(
      "plant_id (empty to keep)",
      ann.poco?.plant_id !== undefined ? String(ann.poco.plant_id) : "",
    );
    const poco: Record<string, unknown> = {};
    if (maturity) poco.maturity_stage = maturity.trim();
    if (plant && !Number.isNaN(Number(plant))) poco.plant_id = Number(plant);
    if (Object.keys(poco).length) patch.poco = poco;
    if (Object.keys(patch).length) void this.controller.updateMetadata(ann.id, patch);
  }
}
