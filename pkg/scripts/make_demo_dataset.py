#!/usr/bin/env python3
"""Build a synthetic demo dataset end-to-end and export it.

Creates a store under --root (default ./demo-store), renders a few synthetic
greenhouse-style images, scans them, annotates with the flood/brush/freeform
tools through the store layer, and writes demo_export.json.
"""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np
from PIL import Image

from pocolabel.config import StoreConfig
from pocolabel.geometry import (
    BrushParams,
    FloodParams,
    brush_stroke_to_region,
    flood_region,
    load_rgb,
    region_clip,
)
from pocolabel.pocoformat import (
    CategoryRecord,
    PocoExt,
    annotation_from_region,
    serialize_dataset,
    validate_dataset,
)
from pocolabel.store import AnnotationStore


def render_plant_image(path: Path, seed: int, size=(96, 72)) -> None:
    rng = np.random.default_rng(seed)
    w, h = size
    img = np.full((h, w, 3), (26, 60, 30), dtype=np.uint8)
    yy, xx = np.mgrid[0:h, 0:w]
    for _ in range(3):  # tomatoes: bright disks
        cx, cy, r = rng.integers(12, w - 12), rng.integers(12, h - 12), rng.integers(5, 10)
        disk = (yy - cy) ** 2 + (xx - cx) ** 2 <= r * r
        img[disk] = (200 + rng.integers(0, 40), 40, 30)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(img).save(path)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--root", default="demo-store")
    parser.add_argument("--images", type=int, default=4)
    args = parser.parse_args()

    store = AnnotationStore(StoreConfig(root=Path(args.root)))
    if "demo" not in [d.name for d in store.datasets()]:
        store.create_dataset("demo", [
            CategoryRecord(id=1, name="tomato", poco={"type": "fruit"}),
            CategoryRecord(id=2, name="stem", poco={"type": "plant_part"}),
        ], metadata_schema=[("maturity_stage", "str"), ("plant_id", "int")])
    images_dir = store.dataset("demo").root_path / "images"
    for i in range(args.images):
        stage = "ripe" if i % 2 else "green"
        render_plant_image(images_dir / "ripening" / stage / f"plant_{i}.png", seed=i)
    added = store.scan_images("demo")
    print(f"scanned {len(added)} new images")

    user = store.users()[0]
    for rec in store.images("demo"):
        store.open_layer(user.id, rec.id)
        pixels = load_rgb(store.image_path(rec.id))
        bright = np.argwhere(pixels[..., 0] > 150)
        if len(bright):
            row, col = bright[len(bright) // 2]
            region = flood_region(pixels, (float(col), float(row)),
                                  FloodParams(color_threshold=60))
            ann = annotation_from_region(0, rec, 1, region,
                                         poco=PocoExt(maturity_stage="ripe"))
            store.add_annotation(user.id, rec.id, ann)
        stroke = [(10.0, float(rec.height - 8)), (float(rec.width - 10), 10.0)]
        stem = region_clip(
            brush_stroke_to_region(stroke, BrushParams(radius=2.0)),
            rec.width, rec.height,
        )
        store.add_annotation(user.id, rec.id,
                             annotation_from_region(0, rec, 2, stem))
        store.close_image(user.id, rec.id)
    store.autosave_tick()

    doc = store.export_dataset("demo", user.id)
    problems = validate_dataset(doc)
    out = Path(args.root) / "demo_export.json"
    out.write_text(serialize_dataset(doc), encoding="utf-8")
    print(f"exported {len(doc.annotations)} annotations to {out}")
    print(f"validation: {'clean' if not problems else problems}")
    stats = store.compute_stats(user.id)
    print(f"stats: {stats}")


if __name__ == "__main__":
    main()
