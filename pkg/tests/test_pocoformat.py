"""Extended-COCO document parsing, serialization, and transforms."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from pocolabel.errors import (
    ConflictError,
    EmptySegmentation,
    IntegrityError,
    ParseError,
    SchemaError,
    UnknownCategory,
)
from pocolabel.geometry import Rle, rasterize, rle_encode, trace_contours
from pocolabel.pocoformat import (
    AnnotationRecord,
    CategoryRecord,
    DatasetDoc,
    ImageRecord,
    PocoExt,
    annotation_from_region,
    derive_geometry,
    export_by_categories,
    merge_datasets,
    parse_dataset,
    region_to_segmentation,
    segmentation_to_region,
    serialize_dataset,
    strict_coco_violations,
    strip_poco,
    validate_dataset,
)

GOLDEN = Path(__file__).parent / "fixtures" / "golden.json"


def minimal_doc() -> str:
    return json.dumps({
        "info": {},
        "images": [{"id": 1, "file_name": "a.png", "width": 4, "height": 4}],
        "annotations": [],
        "categories": [{"id": 1, "name": "leaf", "poco": {"type": "plant_part"}}],
    })


def sample_doc() -> DatasetDoc:
    return parse_dataset(GOLDEN.read_text())


class TestParse:
    def test_minimal_counts(self):
        doc = parse_dataset(minimal_doc())
        assert (len(doc.images), len(doc.annotations), len(doc.categories)) == (1, 0, 1)

    def test_malformed_json(self):
        with pytest.raises(ParseError):
            parse_dataset("{not json")

    def test_keypoints_not_triplets(self):
        raw = json.loads(minimal_doc())
        raw["annotations"] = [{
            "id": 1, "image_id": 1, "category_id": 1,
            "keypoints": [1, 1, 2, 2, 2, 2, 0],
        }]
        with pytest.raises(SchemaError):
            parse_dataset(json.dumps(raw))

    def test_skeleton_index_out_of_range(self):
        raw = json.loads(minimal_doc())
        raw["annotations"] = [{
            "id": 1, "image_id": 1, "category_id": 1,
            "keypoints": [1, 1, 2] * 4,
            "poco": {"skeleton": [[0, 5]]},
        }]
        with pytest.raises(IntegrityError):
            parse_dataset(json.dumps(raw))

    def test_dangling_image_ref(self):
        raw = json.loads(minimal_doc())
        raw["annotations"] = [{"id": 1, "image_id": 99, "category_id": 1}]
        with pytest.raises(IntegrityError):
            parse_dataset(json.dumps(raw))
        doc = parse_dataset(json.dumps(raw), check=False)
        assert any(v.code == "DanglingImageRef" for v in validate_dataset(doc))

    def test_missing_required_field(self):
        raw = json.loads(minimal_doc())
        del raw["images"][0]["width"]
        with pytest.raises(SchemaError):
            parse_dataset(json.dumps(raw))

    def test_bad_visibility(self):
        raw = json.loads(minimal_doc())
        raw["annotations"] = [{
            "id": 1, "image_id": 1, "category_id": 1, "keypoints": [1, 1, 7],
        }]
        with pytest.raises(SchemaError):
            parse_dataset(json.dumps(raw))

    def test_polygon_ring_too_short(self):
        raw = json.loads(minimal_doc())
        raw["annotations"] = [{
            "id": 1, "image_id": 1, "category_id": 1,
            "segmentation": [[0, 0, 1, 1]],
        }]
        with pytest.raises(SchemaError):
            parse_dataset(json.dumps(raw))

    def test_keypoint_names_length_mismatch(self):
        raw = json.loads(minimal_doc())
        raw["annotations"] = [{
            "id": 1, "image_id": 1, "category_id": 1,
            "keypoints": [1, 1, 2, 2, 2, 2],
            "poco": {"keypoint_names": ["only_one"]},
        }]
        with pytest.raises(SchemaError):
            parse_dataset(json.dumps(raw))

    def test_unknown_attrs_preserved(self):
        doc = sample_doc()
        img = doc.image_by_id(1)
        assert img.extra["license"] == 1
        ann = next(a for a in doc.annotations if a.id == 12)
        assert ann.extra["score"] == 0.92
        assert doc.extra["licenses"][0]["name"] == "CC-BY"
        assert doc.annotations[0].poco.extra["notes"] == "demo annotation"


class TestSerialize:
    def test_round_trip_value_identity(self):
        doc = sample_doc()
        assert parse_dataset(serialize_dataset(doc)) == doc

    def test_byte_fixpoint(self):
        first = serialize_dataset(parse_dataset(GOLDEN.read_text()))
        second = serialize_dataset(parse_dataset(first))
        assert first == second

    def test_poco_key_literal_in_output(self):
        out = serialize_dataset(sample_doc())
        assert '"poco"' in out
        for key in ("maturity_stage", "plant_id", "keypoint_names", "skeleton", "type"):
            assert f'"{key}"' in out

    def test_empty_dataset(self):
        out = serialize_dataset(DatasetDoc())
        raw = json.loads(out)
        assert raw == {"info": {}, "images": [], "annotations": [], "categories": []}

    def test_records_sorted_by_id(self):
        out = json.loads(serialize_dataset(sample_doc()))
        assert [i["id"] for i in out["images"]] == [1, 2]
        assert [a["id"] for a in out["annotations"]] == [11, 12]

    def test_category_level_skeleton_not_written(self):
        out = json.loads(serialize_dataset(sample_doc()))
        stem = next(c for c in out["categories"] if c["name"] == "stem")
        assert "skeleton" not in stem and "keypoints" not in stem


class TestStripPoco:
    def test_no_poco_keys_anywhere(self):
        stripped = strip_poco(sample_doc())
        assert '"poco"' not in serialize_dataset(stripped)
        assert strict_coco_violations(stripped) == []

    def test_idempotent(self):
        doc = sample_doc()
        once = strip_poco(doc)
        assert strip_poco(once) == once

    def test_non_poco_content_untouched(self):
        doc = sample_doc()
        stripped = strip_poco(doc)
        assert [a.id for a in stripped.annotations] == [a.id for a in doc.annotations]
        assert stripped.annotations[0].keypoints == doc.annotations[0].keypoints
        assert stripped.images[0].extra == doc.images[0].extra
        assert stripped.info["version"] == "1.0"


class TestMerge:
    def test_merge_with_empty_is_identity_up_to_remap(self):
        doc = sample_doc()
        merged = merge_datasets([doc, DatasetDoc()])
        assert len(merged.annotations) == len(doc.annotations)
        assert len(merged.images) == len(doc.images)
        assert {c.name for c in merged.categories} == {c.name for c in doc.categories}
        assert [a.id for a in merged.annotations] == [1, 2]

    def test_same_category_unified(self):
        def make(tag):
            return parse_dataset(json.dumps({
                "images": [{"id": 1, "file_name": f"{tag}.png", "width": 4, "height": 4}],
                "annotations": [
                    {"id": i, "image_id": 1, "category_id": 7} for i in (1, 2, 3)
                ],
                "categories": [{"id": 7, "name": "tomato", "poco": {"type": "fruit"}}],
            }))

        merged = merge_datasets([make("a"), make("b")])
        assert len(merged.categories) == 1
        assert len(merged.annotations) == 6
        assert sorted(a.id for a in merged.annotations) == [1, 2, 3, 4, 5, 6]
        assert len({a.image_id for a in merged.annotations}) == 2

    def test_conflicting_type_raises(self):
        a = DatasetDoc(categories=[CategoryRecord(id=1, name="leaf", poco={"type": "plant_part"})])
        b = DatasetDoc(categories=[CategoryRecord(id=1, name="leaf", poco={"type": "disease"})])
        with pytest.raises(ConflictError):
            merge_datasets([a, b])

    def test_total_count_preserved_and_ids_unique(self):
        doc = sample_doc()
        merged = merge_datasets([doc, doc, doc])
        assert len(merged.annotations) == 3 * len(doc.annotations)
        ids = [a.id for a in merged.annotations]
        assert len(ids) == len(set(ids))
        assert validate_dataset(merged) == []


class TestExportByCategories:
    def make_doc(self):
        images = [ImageRecord(id=i, file_name=f"{i}.png", width=32, height=32) for i in range(1, 6)]
        cats = [
            CategoryRecord(id=1, name="tomato", poco={"type": "fruit"}),
            CategoryRecord(id=2, name="stem", poco={"type": "plant_part"}),
        ]
        seg = [[1, 1, 5, 1, 5, 5, 1, 5]]
        anns = []
        for i, (img, cat) in enumerate(
            [(1, 1), (2, 1), (3, 1), (2, 2), (4, 2), (5, 1)], start=1
        ):
            anns.append(AnnotationRecord(
                id=i, image_id=img, category_id=cat,
                segmentation=[list(seg[0])], bbox=[1, 1, 4, 4], area=16.0,
            ))
        return DatasetDoc(images=images, annotations=anns, categories=cats)

    def test_identity_filter(self):
        doc = self.make_doc()
        out = export_by_categories(doc, ["tomato", "stem"])
        assert len(out.annotations) == len(doc.annotations)

    def test_stem_filter_keeps_two_images(self):
        out = export_by_categories(self.make_doc(), ["stem"])
        assert {i.id for i in out.images} == {2, 4}
        assert {a.category_id for a in out.annotations} == {2}
        assert [c.name for c in out.categories] == ["stem"]

    def test_ids_preserved(self):
        out = export_by_categories(self.make_doc(), ["stem"])
        assert sorted(a.id for a in out.annotations) == [4, 5]

    def test_unknown_name(self):
        with pytest.raises(UnknownCategory):
            export_by_categories(self.make_doc(), ["dragonfruit"])

    def test_output_validates(self):
        assert validate_dataset(export_by_categories(self.make_doc(), ["stem"])) == []


class TestDeriveGeometry:
    IMG = ImageRecord(id=1, file_name="x.png", width=64, height=64)

    def test_polygon_unit_square(self):
        ann = AnnotationRecord(
            id=1, image_id=1, category_id=1,
            segmentation=[[10, 20, 11, 20, 11, 21, 10, 21]],
        )
        out = derive_geometry(ann, self.IMG)
        assert out.bbox == [10, 20, 1, 1]
        assert out.area == pytest.approx(1.0)
        assert out.iscrowd == 0

    def test_rle_full_2x2(self):
        ann = AnnotationRecord(
            id=1, image_id=1, category_id=1,
            segmentation=Rle(width=2, height=2, counts=(0, 4)),
        )
        out = derive_geometry(ann, self.IMG)
        assert out.bbox == [0.0, 0.0, 2.0, 2.0]
        assert out.area == 4.0
        assert out.iscrowd == 1

    def test_random_blob_area_matches_pixel_count(self, rng):
        mask = rng.random((32, 32)) < 0.4
        region = trace_contours(mask)
        ann = AnnotationRecord(
            id=1, image_id=1, category_id=1,
            segmentation=rle_encode(mask),
        )
        out = derive_geometry(ann, self.IMG)
        assert out.area == float(mask.sum())
        assert out.area == pytest.approx(region.area)

    def test_empty_segmentation(self):
        ann = AnnotationRecord(id=1, image_id=1, category_id=1, segmentation=[])
        with pytest.raises(EmptySegmentation):
            derive_geometry(ann, self.IMG)


class TestRegionBridge:
    def test_holes_fall_back_to_rle(self):
        from pocolabel.geometry import Polygon, Region

        region = Region(
            (Polygon(((0, 0), (6, 0), (6, 6), (0, 6))),),
            (Polygon(((2, 2), (4, 2), (4, 4), (2, 4))),),
        )
        seg = region_to_segmentation(region, 8, 8)
        assert isinstance(seg, Rle)
        back = segmentation_to_region(seg, 8, 8)
        assert back.area == pytest.approx(region.area)

    def test_hole_free_region_stays_polygonal(self):
        from pocolabel.geometry import Polygon, Region

        region = Region((Polygon(((0, 0), (4, 0), (4, 4), (0, 4))),))
        seg = region_to_segmentation(region, 8, 8)
        assert seg == [[0.0, 0.0, 4.0, 0.0, 4.0, 4.0, 0.0, 4.0]]

    def test_annotation_from_region_validates(self):
        from pocolabel.geometry import Polygon, Region

        img = ImageRecord(id=3, file_name="x.png", width=16, height=16)
        region = Region((Polygon(((1, 1), (9, 1), (9, 8), (1, 8))),))
        ann = annotation_from_region(5, img, 2, region)
        doc = DatasetDoc(
            images=[img],
            annotations=[ann],
            categories=[CategoryRecord(id=2, name="leaf")],
        )
        assert validate_dataset(doc) == []


class TestValidate:
    def test_consistent_doc_is_clean(self):
        assert validate_dataset(sample_doc()) == []

    def test_bbox_out_of_bounds(self):
        doc = sample_doc()
        doc.annotations[0].bbox = [630.0, 20.0, 40.0, 4.0]
        codes = [v.code for v in validate_dataset(doc)]
        assert "BboxOutOfBounds" in codes

    def test_area_mismatch(self):
        doc = sample_doc()
        doc.annotations[0].area = 50.0  # real segmentation area is 16
        codes = [v.code for v in validate_dataset(doc)]
        assert "AreaMismatch" in codes

    def test_violations_are_returned_not_raised(self):
        doc = sample_doc()
        doc.annotations[0].area = -5
        assert any(v.code == "NegativeArea" for v in validate_dataset(doc))
