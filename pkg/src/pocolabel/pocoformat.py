"""Extended-COCO ("poco") dataset documents.

A dataset is plain COCO JSON (info / images / annotations / categories)
where any record may carry an extra ``poco`` attribute block; native COCO
tools ignore it.  Annotation blocks hold ``maturity_stage``, ``plant_id``,
``keypoint_names`` and a per-annotation ``skeleton`` (edges as pairs of
0-based keypoint indices), category blocks hold ``type``.

Parsing preserves unknown attributes verbatim; serialization is
deterministic (records sorted by id, schema key order, shortest float
repr), so ``serialize -> parse -> serialize`` is a byte-level fixpoint.
One deliberate exception to preservation: category-level ``keypoints`` /
``skeleton`` (COCO keypoint-task style) are accepted but not stored -- the
per-annotation skeleton replaces them.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Any, Union

from .errors import (
    ConflictError,
    EmptySegmentation,
    IntegrityError,
    ParseError,
    SchemaError,
    UnknownCategory,
)
from .geometry import (
    Polygon,
    Region,
    Rle,
    bounding_box,
    rasterize,
    rle_decode,
    rle_encode,
    signed_ring_area,
    trace_contours,
)

Segmentation = Union[Rle, list]  # Rle or list of flat [x1, y1, x2, y2, ...] rings


# --------------------------------------------------------------------------
# records


@dataclass
class PocoExt:
    """Per-annotation extension block."""

    maturity_stage: str | None = None
    plant_id: int | None = None
    keypoint_names: list[str] | None = None
    skeleton: list[list[int]] | None = None
    extra: dict = field(default_factory=dict)

    @property
    def is_empty(self) -> bool:
        return (
            self.maturity_stage is None
            and self.plant_id is None
            and self.keypoint_names is None
            and self.skeleton is None
            and not self.extra
        )


@dataclass
class ImageRecord:
    id: int
    file_name: str
    width: int
    height: int
    poco: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)


@dataclass
class CategoryRecord:
    id: int
    name: str
    supercategory: str | None = None
    poco: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    @property
    def poco_type(self) -> str | None:
        return self.poco.get("type")


@dataclass
class AnnotationRecord:
    id: int
    image_id: int
    category_id: int
    segmentation: Segmentation | None = None
    bbox: list | None = None  # [x, y, width, height]
    area: float | None = None
    iscrowd: int | None = None
    keypoints: list = field(default_factory=list)  # [x1, y1, v1, ...]
    num_keypoints: int | None = None
    poco: PocoExt = field(default_factory=PocoExt)
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        # COCO readers expect iscrowd: 0 for polygons, 1 for raster masks
        if self.iscrowd is None and self.segmentation is not None:
            self.iscrowd = 1 if isinstance(self.segmentation, Rle) else 0

    @property
    def keypoint_count(self) -> int:
        return len(self.keypoints) // 3


@dataclass
class DatasetDoc:
    info: dict = field(default_factory=dict)
    images: list[ImageRecord] = field(default_factory=list)
    annotations: list[AnnotationRecord] = field(default_factory=list)
    categories: list[CategoryRecord] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        # canonical record order makes serialize(parse(.)) an identity
        self.images.sort(key=lambda r: r.id)
        self.annotations.sort(key=lambda r: r.id)
        self.categories.sort(key=lambda r: r.id)

    def image_by_id(self, image_id: int) -> ImageRecord | None:
        return next((i for i in self.images if i.id == image_id), None)

    def category_by_id(self, category_id: int) -> CategoryRecord | None:
        return next((c for c in self.categories if c.id == category_id), None)


@dataclass(frozen=True)
class Violation:
    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


# --------------------------------------------------------------------------
# parsing


def _expect(obj: dict, key: str, kinds, where: str, required=True, default=None):
    if key not in obj:
        if required:
            raise SchemaError(f"{where}: missing required field '{key}'")
        return default
    value = obj[key]
    if kinds is not None and not isinstance(value, kinds):
        raise SchemaError(f"{where}: field '{key}' has wrong type {type(value).__name__}")
    if isinstance(value, bool) and kinds is not None and bool not in _as_tuple(kinds):
        raise SchemaError(f"{where}: field '{key}' has wrong type bool")
    return value


def _as_tuple(kinds):
    return kinds if isinstance(kinds, tuple) else (kinds,)


_NUM = (int, float)


def _parse_image(obj: dict) -> ImageRecord:
    if not isinstance(obj, dict):
        raise SchemaError("image record is not an object")
    where = f"image {obj.get('id', '?')}"
    rec = ImageRecord(
        id=_expect(obj, "id", int, where),
        file_name=_expect(obj, "file_name", str, where),
        width=_expect(obj, "width", int, where),
        height=_expect(obj, "height", int, where),
        poco=dict(_expect(obj, "poco", dict, where, required=False, default={})),
        extra={k: v for k, v in obj.items()
               if k not in ("id", "file_name", "width", "height", "poco")},
    )
    if rec.width <= 0 or rec.height <= 0:
        raise SchemaError(f"{where}: width/height must be positive")
    if not rec.file_name:
        raise SchemaError(f"{where}: file_name must be non-empty")
    return rec


def _parse_category(obj: dict) -> CategoryRecord:
    if not isinstance(obj, dict):
        raise SchemaError("category record is not an object")
    where = f"category {obj.get('id', '?')}"
    poco = dict(_expect(obj, "poco", dict, where, required=False, default={}))
    if "type" in poco and not isinstance(poco["type"], str):
        raise SchemaError(f"{where}: poco.type must be a string")
    rec = CategoryRecord(
        id=_expect(obj, "id", int, where),
        name=_expect(obj, "name", str, where),
        supercategory=_expect(obj, "supercategory", str, where, required=False),
        poco=poco,
        # category-level keypoint names/skeleton are COCO keypoint-task
        # fields; accepted here, replaced by per-annotation skeletons
        extra={k: v for k, v in obj.items()
               if k not in ("id", "name", "supercategory", "poco", "keypoints", "skeleton")},
    )
    if not rec.name:
        raise SchemaError(f"{where}: name must be non-empty")
    return rec


def _parse_segmentation(value, where: str) -> Segmentation | None:
    if value is None:
        return None
    if isinstance(value, dict):
        counts = _expect(value, "counts", list, f"{where} segmentation")
        size = _expect(value, "size", list, f"{where} segmentation")
        if len(size) != 2 or not all(isinstance(v, int) and v > 0 for v in size):
            raise SchemaError(f"{where}: RLE size must be [height, width]")
        if not all(isinstance(c, int) and c >= 0 for c in counts):
            raise SchemaError(f"{where}: RLE counts must be non-negative integers")
        try:
            return Rle(width=size[1], height=size[0], counts=tuple(counts))
        except ValueError as exc:
            raise SchemaError(f"{where}: {exc}") from exc
    if isinstance(value, list):
        for ring in value:
            if not isinstance(ring, list) or len(ring) < 6 or len(ring) % 2 != 0:
                raise SchemaError(
                    f"{where}: polygon coordinate lists need even length >= 6"
                )
            if not all(isinstance(v, _NUM) and not isinstance(v, bool) and math.isfinite(v) for v in ring):
                raise SchemaError(f"{where}: polygon coordinates must be finite numbers")
        return [list(ring) for ring in value]
    raise SchemaError(f"{where}: segmentation must be RLE object or list of polygons")


def _parse_poco_ext(obj: dict, where: str) -> PocoExt:
    known = ("maturity_stage", "plant_id", "keypoint_names", "skeleton")
    maturity = _expect(obj, "maturity_stage", str, where, required=False)
    plant_id = _expect(obj, "plant_id", int, where, required=False)
    names = _expect(obj, "keypoint_names", list, where, required=False)
    if names is not None and not all(isinstance(n, str) for n in names):
        raise SchemaError(f"{where}: keypoint_names must be strings")
    skeleton = _expect(obj, "skeleton", list, where, required=False)
    if skeleton is not None:
        for edge in skeleton:
            if (
                not isinstance(edge, list)
                or len(edge) != 2
                or not all(isinstance(v, int) and not isinstance(v, bool) for v in edge)
            ):
                raise SchemaError(f"{where}: skeleton edges must be [from, to] index pairs")
        skeleton = [list(e) for e in skeleton]
    return PocoExt(
        maturity_stage=maturity,
        plant_id=plant_id,
        keypoint_names=list(names) if names is not None else None,
        skeleton=skeleton,
        extra={k: v for k, v in obj.items() if k not in known},
    )


def _parse_annotation(obj: dict) -> AnnotationRecord:
    if not isinstance(obj, dict):
        raise SchemaError("annotation record is not an object")
    where = f"annotation {obj.get('id', '?')}"
    keypoints = _expect(obj, "keypoints", list, where, required=False, default=[])
    _check_keypoints(keypoints, where)
    bbox = _expect(obj, "bbox", list, where, required=False)
    if bbox is not None:
        if len(bbox) != 4 or not all(isinstance(v, _NUM) and not isinstance(v, bool) for v in bbox):
            raise SchemaError(f"{where}: bbox must be [x, y, width, height]")
        if bbox[2] < 0 or bbox[3] < 0:
            raise SchemaError(f"{where}: bbox width/height must be >= 0")
    area = _expect(obj, "area", _NUM, where, required=False)
    if area is not None and area < 0:
        raise SchemaError(f"{where}: area must be >= 0")
    iscrowd = _expect(obj, "iscrowd", int, where, required=False)
    num_keypoints = _expect(obj, "num_keypoints", int, where, required=False)
    poco_obj = _expect(obj, "poco", dict, where, required=False, default={})
    poco = _parse_poco_ext(poco_obj, where)
    if poco.keypoint_names is not None and len(poco.keypoint_names) != len(keypoints) // 3:
        raise SchemaError(
            f"{where}: keypoint_names length {len(poco.keypoint_names)} does not match "
            f"{len(keypoints) // 3} keypoint triplets"
        )
    known = (
        "id", "image_id", "category_id", "segmentation", "bbox", "area",
        "iscrowd", "keypoints", "num_keypoints", "poco",
    )
    return AnnotationRecord(
        id=_expect(obj, "id", int, where),
        image_id=_expect(obj, "image_id", int, where),
        category_id=_expect(obj, "category_id", int, where),
        segmentation=_parse_segmentation(obj.get("segmentation"), where),
        bbox=list(bbox) if bbox is not None else None,
        area=area,
        iscrowd=iscrowd,
        keypoints=list(keypoints),
        num_keypoints=num_keypoints,
        poco=poco,
        extra={k: v for k, v in obj.items() if k not in known},
    )


def _check_keypoints(keypoints: list, where: str) -> None:
    if len(keypoints) % 3 != 0:
        raise SchemaError(f"{where}: keypoints length {len(keypoints)} not divisible by 3")
    for i in range(0, len(keypoints), 3):
        x, y, v = keypoints[i : i + 3]
        ok = all(isinstance(c, _NUM) and not isinstance(c, bool) for c in (x, y))
        if not ok or not (math.isfinite(x) and math.isfinite(y)):
            raise SchemaError(f"{where}: keypoint coordinates must be finite numbers")
        if not isinstance(v, int) or isinstance(v, bool) or v not in (0, 1, 2):
            raise SchemaError(f"{where}: keypoint visibility must be 0, 1 or 2")


def check_integrity(doc: DatasetDoc) -> list[Violation]:
    """Cross-record rules; returned as violations so callers choose to raise."""
    out: list[Violation] = []
    image_ids = set()
    for rec in doc.images:
        if rec.id in image_ids:
            out.append(Violation("DuplicateImageId", f"image id {rec.id} appears twice"))
        image_ids.add(rec.id)
    category_ids = set()
    for rec in doc.categories:
        if rec.id in category_ids:
            out.append(Violation("DuplicateCategoryId", f"category id {rec.id} appears twice"))
        category_ids.add(rec.id)
    seen_ann = set()
    for ann in doc.annotations:
        where = f"annotation {ann.id}"
        if ann.id in seen_ann:
            out.append(Violation("DuplicateAnnotationId", f"annotation id {ann.id} appears twice"))
        seen_ann.add(ann.id)
        if ann.image_id not in image_ids:
            out.append(Violation("DanglingImageRef", f"{where}: image_id {ann.image_id} does not resolve"))
        if ann.category_id not in category_ids:
            out.append(Violation("DanglingCategoryRef", f"{where}: category_id {ann.category_id} does not resolve"))
        out.extend(skeleton_violations(ann))
    return out


def skeleton_violations(ann: AnnotationRecord) -> list[Violation]:
    out: list[Violation] = []
    if ann.poco.skeleton is None:
        return out
    where = f"annotation {ann.id}"
    n = ann.keypoint_count
    for edge in ann.poco.skeleton:
        if edge[0] == edge[1]:
            out.append(Violation("SkeletonSelfLoop", f"{where}: skeleton edge {edge} is a self-loop"))
        elif not (0 <= edge[0] < n and 0 <= edge[1] < n):
            out.append(Violation(
                "SkeletonIndexOutOfRange",
                f"{where}: skeleton edge {edge} outside 0..{n - 1}",
            ))
    return out


def parse_dataset(data: str | bytes, check: bool = True) -> DatasetDoc:
    """Parse a poco/COCO JSON document.

    Raises :class:`ParseError` on malformed JSON, :class:`SchemaError` on
    shape problems, and (when ``check``) :class:`IntegrityError` on broken
    cross-record rules.  Unknown attributes are kept for round-tripping.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        raw = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON document: {exc}") from exc
    if not isinstance(raw, dict):
        raise SchemaError("top-level value must be an object")

    info = _expect(raw, "info", dict, "document", required=False, default={})
    images = _expect(raw, "images", list, "document", required=False, default=[])
    annotations = _expect(raw, "annotations", list, "document", required=False, default=[])
    categories = _expect(raw, "categories", list, "document", required=False, default=[])
    doc = DatasetDoc(
        info=dict(info),
        images=[_parse_image(r) for r in images],
        annotations=[_parse_annotation(r) for r in annotations],
        categories=[_parse_category(r) for r in categories],
        extra={k: v for k, v in raw.items()
               if k not in ("info", "images", "annotations", "categories")},
    )
    if check:
        problems = check_integrity(doc)
        if problems:
            raise IntegrityError("; ".join(str(v) for v in problems))
    return doc


# --------------------------------------------------------------------------
# serialization


def _deep_sorted(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _deep_sorted(value[k]) for k in sorted(value)}
    if isinstance(value, list):
        return [_deep_sorted(v) for v in value]
    return value


def _image_obj(rec: ImageRecord) -> dict:
    out: dict = {
        "id": rec.id,
        "file_name": rec.file_name,
        "width": rec.width,
        "height": rec.height,
    }
    if rec.poco:
        out["poco"] = _deep_sorted(rec.poco)
    out.update(_deep_sorted(rec.extra))
    return out


def _category_obj(rec: CategoryRecord) -> dict:
    out: dict = {"id": rec.id, "name": rec.name}
    if rec.supercategory is not None:
        out["supercategory"] = rec.supercategory
    if rec.poco:
        out["poco"] = _deep_sorted(rec.poco)
    out.update(_deep_sorted(rec.extra))
    return out


def _poco_ext_obj(ext: PocoExt) -> dict:
    out: dict = {}
    if ext.maturity_stage is not None:
        out["maturity_stage"] = ext.maturity_stage
    if ext.plant_id is not None:
        out["plant_id"] = ext.plant_id
    if ext.keypoint_names is not None:
        out["keypoint_names"] = list(ext.keypoint_names)
    if ext.skeleton is not None:
        out["skeleton"] = [list(e) for e in ext.skeleton]
    out.update(_deep_sorted(ext.extra))
    return out


def _annotation_obj(rec: AnnotationRecord) -> dict:
    out: dict = {
        "id": rec.id,
        "image_id": rec.image_id,
        "category_id": rec.category_id,
    }
    if rec.segmentation is not None:
        if isinstance(rec.segmentation, Rle):
            out["segmentation"] = rec.segmentation.to_coco()
        else:
            out["segmentation"] = [list(ring) for ring in rec.segmentation]
    if rec.bbox is not None:
        out["bbox"] = list(rec.bbox)
    if rec.area is not None:
        out["area"] = rec.area
    if rec.iscrowd is not None:
        out["iscrowd"] = rec.iscrowd
    if rec.keypoints:
        out["keypoints"] = list(rec.keypoints)
    if rec.num_keypoints is not None:
        out["num_keypoints"] = rec.num_keypoints
    if not rec.poco.is_empty:
        out["poco"] = _poco_ext_obj(rec.poco)
    out.update(_deep_sorted(rec.extra))
    return out


# single-record object converters; the store and the HTTP service exchange
# annotation/image fragments in exactly the document schema
annotation_to_obj = _annotation_obj
annotation_from_obj = _parse_annotation
image_to_obj = _image_obj
image_from_obj = _parse_image


def serialize_dataset(doc: DatasetDoc) -> str:
    """Deterministic UTF-8 JSON text for a dataset document."""
    obj: dict = {
        "info": _deep_sorted(doc.info),
        "images": [_image_obj(r) for r in sorted(doc.images, key=lambda r: r.id)],
        "annotations": [_annotation_obj(r) for r in sorted(doc.annotations, key=lambda r: r.id)],
        "categories": [_category_obj(r) for r in sorted(doc.categories, key=lambda r: r.id)],
    }
    obj.update(_deep_sorted(doc.extra))
    return json.dumps(obj, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def write_dataset(doc: DatasetDoc, path) -> None:
    from pathlib import Path

    Path(path).write_text(serialize_dataset(doc), encoding="utf-8")


def read_dataset(path, check: bool = True) -> DatasetDoc:
    from pathlib import Path

    return parse_dataset(Path(path).read_text(encoding="utf-8"), check=check)


# --------------------------------------------------------------------------
# transforms


def strip_poco(doc: DatasetDoc) -> DatasetDoc:
    """Drop every poco block, leaving a pure COCO document."""
    info = {k: v for k, v in doc.info.items() if k != "poco"}
    return DatasetDoc(
        info=info,
        images=[replace(r, poco={}, extra=dict(r.extra)) for r in doc.images],
        annotations=[replace(r, poco=PocoExt(), extra=dict(r.extra)) for r in doc.annotations],
        categories=[replace(r, poco={}, extra=dict(r.extra)) for r in doc.categories],
        extra=dict(doc.extra),
    )


def merge_datasets(docs: list[DatasetDoc]) -> DatasetDoc:
    """Merge documents, unifying categories that share (name, poco type).

    Image and annotation ids are renumbered sequentially from 1 preserving
    input order; categories get ids in first-appearance order.  Categories
    sharing a name but not a type conflict.
    """
    if not docs:
        raise ValueError("need at least one document to merge")
    merged = DatasetDoc()
    cat_ids: dict[tuple, int] = {}
    name_types: dict[str, str | None] = {}
    next_image = 1
    next_ann = 1
    for doc in docs:
        cat_remap: dict[int, int] = {}
        for cat in doc.categories:
            key = (cat.name, cat.poco_type)
            if cat.name in name_types and name_types[cat.name] != cat.poco_type:
                raise ConflictError(
                    f"category '{cat.name}' has conflicting types "
                    f"{name_types[cat.name]!r} and {cat.poco_type!r}"
                )
            name_types[cat.name] = cat.poco_type
            if key not in cat_ids:
                cat_ids[key] = len(cat_ids) + 1
                merged.categories.append(replace(
                    cat, id=cat_ids[key], poco=dict(cat.poco), extra=dict(cat.extra),
                ))
            cat_remap[cat.id] = cat_ids[key]
        image_remap: dict[int, int] = {}
        for img in doc.images:
            image_remap[img.id] = next_image
            merged.images.append(replace(
                img, id=next_image, poco=dict(img.poco), extra=dict(img.extra),
            ))
            next_image += 1
        for ann in doc.annotations:
            merged.annotations.append(replace(
                ann,
                id=next_ann,
                image_id=image_remap[ann.image_id],
                category_id=cat_remap[ann.category_id],
                poco=replace(ann.poco, extra=dict(ann.poco.extra)),
                extra=dict(ann.extra),
            ))
            next_ann += 1
        for key, value in doc.info.items():
            merged.info.setdefault(key, value)
        for key, value in doc.extra.items():
            merged.extra.setdefault(key, value)
    merged.__post_init__()
    return merged


def export_by_categories(doc: DatasetDoc, names: list[str]) -> DatasetDoc:
    """Keep only the named categories, their annotations, and images that
    retain at least one annotation; ids are preserved."""
    if not names:
        raise ValueError("names must be non-empty")
    known = {c.name for c in doc.categories}
    missing = [n for n in names if n not in known]
    if missing:
        raise UnknownCategory(f"no such category: {', '.join(sorted(missing))}")
    wanted = set(names)
    categories = [c for c in doc.categories if c.name in wanted]
    keep_cat_ids = {c.id for c in categories}
    annotations = [a for a in doc.annotations if a.category_id in keep_cat_ids]
    keep_image_ids = {a.image_id for a in annotations}
    images = [i for i in doc.images if i.id in keep_image_ids]
    return DatasetDoc(
        info=dict(doc.info),
        images=images,
        annotations=annotations,
        categories=categories,
        extra=dict(doc.extra),
    )


# --------------------------------------------------------------------------
# geometry bridging


def region_to_segmentation(region: Region, width: int, height: int) -> Segmentation:
    """Polygon lists when the region has no holes, RLE otherwise.

    COCO polygon segmentations cannot express holes, so a region with holes
    is rasterized losslessly instead.
    """
    if region.holes or region.is_empty:
        return rle_encode(rasterize(region, width, height))
    return [shell.flat_coords() for shell in region.shells]


def segmentation_to_region(seg: Segmentation, width: int = 0, height: int = 0) -> Region:
    if isinstance(seg, Rle):
        return trace_contours(rle_decode(seg))
    shells = []
    for ring in seg:
        pts = [(float(ring[i]), float(ring[i + 1])) for i in range(0, len(ring), 2)]
        deduped = [p for i, p in enumerate(pts) if i == 0 or p != pts[i - 1]]
        if len(deduped) > 1 and deduped[0] == deduped[-1]:
            deduped.pop()
        if len(deduped) >= 3:
            shells.append(Polygon(tuple(deduped)))
    return Region(tuple(shells))


def segmentation_area(seg: Segmentation) -> float:
    if isinstance(seg, Rle):
        return float(rle_decode(seg).sum())
    total = 0.0
    for ring in seg:
        pts = [(ring[i], ring[i + 1]) for i in range(0, len(ring), 2)]
        total += abs(signed_ring_area(pts))
    return total


def segmentation_bbox(seg: Segmentation) -> list[float]:
    if isinstance(seg, Rle):
        mask = rle_decode(seg)
        rows, cols = mask.nonzero()
        if len(rows) == 0:
            return [0.0, 0.0, 0.0, 0.0]
        return [
            float(cols.min()),
            float(rows.min()),
            float(cols.max() + 1 - cols.min()),
            float(rows.max() + 1 - rows.min()),
        ]
    xs = [v for ring in seg for v in ring[0::2]]
    ys = [v for ring in seg for v in ring[1::2]]
    return [min(xs), min(ys), max(xs) - min(xs), max(ys) - min(ys)]


def derive_geometry(ann: AnnotationRecord, image: ImageRecord) -> AnnotationRecord:
    """Fill bbox/area (and iscrowd) from the segmentation."""
    seg = ann.segmentation
    if seg is None or (isinstance(seg, list) and not seg):
        raise EmptySegmentation(f"annotation {ann.id} has no segmentation")
    return replace(
        ann,
        bbox=segmentation_bbox(seg),
        area=segmentation_area(seg),
        iscrowd=1 if isinstance(seg, Rle) else 0,
    )


def annotation_from_region(
    ann_id: int,
    image: ImageRecord,
    category_id: int,
    region: Region,
    poco: PocoExt | None = None,
) -> AnnotationRecord:
    """Build a stored annotation record from tool output geometry."""
    seg = region_to_segmentation(region, image.width, image.height)
    ann = AnnotationRecord(
        id=ann_id,
        image_id=image.id,
        category_id=category_id,
        segmentation=seg,
        poco=poco or PocoExt(),
    )
    return derive_geometry(ann, image)


# --------------------------------------------------------------------------
# validation


def validate_dataset(doc: DatasetDoc) -> list[Violation]:
    """All violated invariants and cross-record rules, empty when clean."""
    out = list(check_integrity(doc))
    images = {i.id: i for i in doc.images}
    for img in doc.images:
        if img.width <= 0 or img.height <= 0:
            out.append(Violation("BadImageSize", f"image {img.id}: non-positive dimensions"))
        if not img.file_name:
            out.append(Violation("EmptyFileName", f"image {img.id}: empty file_name"))
    for cat in doc.categories:
        if not cat.name:
            out.append(Violation("EmptyCategoryName", f"category {cat.id}: empty name"))
    for ann in doc.annotations:
        where = f"annotation {ann.id}"
        if len(ann.keypoints) % 3 != 0:
            out.append(Violation("BadKeypoints", f"{where}: keypoints not triplets"))
        else:
            for i in range(2, len(ann.keypoints), 3):
                if ann.keypoints[i] not in (0, 1, 2):
                    out.append(Violation("BadVisibility", f"{where}: visibility {ann.keypoints[i]}"))
        names = ann.poco.keypoint_names
        if names is not None and len(names) != ann.keypoint_count:
            out.append(Violation(
                "BadKeypointNames",
                f"{where}: {len(names)} names for {ann.keypoint_count} keypoints",
            ))
        if names is not None and ann.num_keypoints is not None and len(names) != ann.num_keypoints:
            out.append(Violation(
                "NumKeypointsMismatch",
                f"{where}: num_keypoints {ann.num_keypoints} != {len(names)} names",
            ))
        if ann.area is not None and ann.area < 0:
            out.append(Violation("NegativeArea", f"{where}: area {ann.area}"))
        if ann.bbox is not None:
            x, y, w, h = ann.bbox
            if w < 0 or h < 0:
                out.append(Violation("NegativeBbox", f"{where}: bbox {ann.bbox}"))
            img = images.get(ann.image_id)
            if img is not None and not (
                x >= -0.5 and y >= -0.5 and x + w <= img.width + 0.5 and y + h <= img.height + 0.5
            ):
                out.append(Violation(
                    "BboxOutOfBounds",
                    f"{where}: bbox {ann.bbox} exceeds {img.width}x{img.height} image",
                ))
        seg = ann.segmentation
        if seg is not None and not (isinstance(seg, list) and not seg) and ann.area is not None:
            computed = segmentation_area(seg)
            if abs(ann.area - computed) > 0.05 * max(computed, 1e-9) + 1e-9:
                out.append(Violation(
                    "AreaMismatch",
                    f"{where}: stored area {ann.area} vs segmentation area {computed}",
                ))
    return out


def strict_coco_violations(doc: DatasetDoc) -> list[Violation]:
    """Checks for plain-COCO consumers: no poco keys may remain anywhere."""
    out: list[Violation] = []

    def scan(value, where):
        if isinstance(value, dict):
            for k, v in value.items():
                if k == "poco":
                    out.append(Violation("PocoKeyPresent", f"{where}: 'poco' key present"))
                scan(v, where)
        elif isinstance(value, list):
            for v in value:
                scan(v, where)

    for img in doc.images:
        if img.poco:
            out.append(Violation("PocoKeyPresent", f"image {img.id}: poco block present"))
        scan(img.extra, f"image {img.id}")
    for ann in doc.annotations:
        if not ann.poco.is_empty:
            out.append(Violation("PocoKeyPresent", f"annotation {ann.id}: poco block present"))
        scan(ann.extra, f"annotation {ann.id}")
    for cat in doc.categories:
        if cat.poco:
            out.append(Violation("PocoKeyPresent", f"category {cat.id}: poco block present"))
        scan(cat.extra, f"category {cat.id}")
    scan(doc.info, "info")
    scan(doc.extra, "document")
    return out
