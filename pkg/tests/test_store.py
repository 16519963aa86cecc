"""Filesystem store: datasets, scanning, layers, undo, autosave, export."""

from __future__ import annotations

import json
from pathlib import Path

import pytest
from PIL import Image

from pocolabel.config import StoreConfig
from pocolabel.errors import (
    NameTaken,
    NothingToUndo,
    UnknownAnnotation,
    UnknownDataset,
    UnknownUser,
)
from pocolabel.pocoformat import (
    AnnotationRecord,
    CategoryRecord,
    parse_dataset,
    serialize_dataset,
    validate_dataset,
)
from pocolabel.store import AnnotationStore


def write_png(path: Path, size=(8, 6), color=(10, 120, 60)):
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.new("RGB", size, color).save(path)


def make_store(root: Path, **kwargs) -> AnnotationStore:
    return AnnotationStore(StoreConfig(root=root, **kwargs))


def square_annotation(ann_id=0, image_id=0, category_id=1, origin=(1, 1), side=2.0):
    x, y = origin
    ring = [x, y, x + side, y, x + side, y + side, x, y + side]
    return AnnotationRecord(
        id=ann_id, image_id=image_id, category_id=category_id,
        segmentation=[ring], bbox=[x, y, side, side], area=side * side,
    )


CATS = [
    CategoryRecord(id=1, name="tomato", poco={"type": "fruit"}),
    CategoryRecord(id=2, name="stem", poco={"type": "plant_part"}),
]


@pytest.fixture
def store(tmp_path):
    return make_store(tmp_path / "root")


@pytest.fixture
def dataset(store):
    store.create_dataset("greenhouse", CATS)
    images = store.dataset("greenhouse").root_path / "images"
    write_png(images / "plain.png")
    write_png(images / "ripening/red/img1.jpg")
    write_png(images / "ripening/green/img2.png")
    store.scan_images("greenhouse")
    return store


class TestDatasets:
    def test_create_makes_directory(self, store, tmp_path):
        ds = store.create_dataset("demo", CATS)
        assert ds.root_path.is_dir()
        assert (ds.root_path / "images").is_dir()

    def test_duplicate_name(self, store):
        store.create_dataset("demo", CATS)
        with pytest.raises(NameTaken):
            store.create_dataset("demo", CATS)

    def test_duplicate_category_ids_rejected(self, store):
        cats = [CategoryRecord(id=1, name="a"), CategoryRecord(id=1, name="b")]
        with pytest.raises(ValueError):
            store.create_dataset("demo", cats)

    def test_unknown_dataset(self, store):
        with pytest.raises(UnknownDataset):
            store.dataset("nope")

    def test_definition_persists_across_restart(self, store, tmp_path):
        store.create_dataset("demo", CATS, metadata_schema=[("ripeness", "str")])
        reloaded = make_store(tmp_path / "root")
        ds = reloaded.dataset("demo")
        assert [c.name for c in ds.categories] == ["tomato", "stem"]
        assert ds.metadata_schema == [("ripeness", "str")]


class TestScan:
    def test_directory_labels(self, dataset):
        recs = {r.file_name: r for r in dataset.images("greenhouse")}
        assert recs["ripening/red/img1.jpg"].poco["directory_labels"] == ["ripening", "red"]
        assert "directory_labels" not in recs["plain.png"].poco

    def test_rescan_is_idempotent(self, dataset):
        assert dataset.scan_images("greenhouse") == []
        assert len(dataset.images("greenhouse")) == 3

    def test_new_files_get_new_ids(self, dataset):
        images = dataset.dataset("greenhouse").root_path / "images"
        before = {r.id for r in dataset.images("greenhouse")}
        for name in ("x1.png", "x2.png", "x3.png"):
            write_png(images / name)
        added = dataset.scan_images("greenhouse")
        assert len(added) == 3
        assert {r.id for r in added}.isdisjoint(before)
        assert len({r.id for r in added}) == 3

    def test_deleted_file_marked_missing_not_removed(self, dataset):
        images = dataset.dataset("greenhouse").root_path / "images"
        (images / "plain.png").unlink()
        dataset.scan_images("greenhouse")
        recs = {r.file_name: r for r in dataset.images("greenhouse")}
        assert recs["plain.png"].poco.get("missing") is True
        write_png(images / "plain.png")
        dataset.scan_images("greenhouse")
        recs = {r.file_name: r for r in dataset.images("greenhouse")}
        assert "missing" not in recs["plain.png"].poco

    def test_sizes_read_from_headers(self, dataset):
        rec = dataset.images("greenhouse")[0]
        assert (rec.width, rec.height) == (8, 6)


class TestUsers:
    def test_default_superuser(self, store):
        users = store.users()
        assert users[0].username == "admin"
        assert users[0].role == "superuser"

    def test_duplicate_username(self, store):
        store.add_user("kim")
        with pytest.raises(NameTaken):
            store.add_user("kim")

    def test_clone_from_must_exist(self, store):
        with pytest.raises(UnknownUser):
            store.add_user("kim", clone_from=99)

    def test_find_user_by_name_or_id(self, store):
        u = store.add_user("kim")
        assert store.find_user("kim").id == u.id
        assert store.find_user(str(u.id)).username == "kim"


class TestLayers:
    def test_blank_first_open_is_empty(self, dataset):
        image = dataset.images("greenhouse")[0]
        layer = dataset.open_layer(1, image.id)
        assert layer.annotations == []
        assert layer.revision == 0

    def test_second_open_returns_same_layer(self, dataset):
        image = dataset.images("greenhouse")[0]
        first = dataset.open_layer(1, image.id)
        dataset.add_annotation(1, image.id, square_annotation())
        again = dataset.open_layer(1, image.id)
        assert again is first
        assert again.revision == 1
        assert len(again.annotations) == 1

    def test_clone_mode_copies_with_fresh_ids(self, dataset):
        image = dataset.images("greenhouse")[0]
        for i in range(4):
            dataset.add_annotation(1, image.id, square_annotation(origin=(i, i)))
        cloner = dataset.add_user("apprentice", clone_from=1)
        layer = dataset.open_layer(cloner.id, image.id)
        source = dataset.open_layer(1, image.id)
        assert len(layer.annotations) == 4
        src_ids = {a.id for a in source.annotations}
        assert {a.id for a in layer.annotations}.isdisjoint(src_ids)

    def test_clone_never_aliases_source(self, dataset):
        image = dataset.images("greenhouse")[0]
        dataset.add_annotation(1, image.id, square_annotation())
        cloner = dataset.add_user("apprentice", clone_from=1)
        layer = dataset.open_layer(cloner.id, image.id)
        layer_ann = layer.annotations[0]
        dataset.modify_annotation(
            cloner.id, image.id,
            square_annotation(ann_id=layer_ann.id, image_id=image.id, origin=(4, 4)),
        )
        source = dataset.open_layer(1, image.id)
        assert source.annotations[0].bbox == [1, 1, 2.0, 2.0]

    def test_unknown_user_and_image(self, dataset):
        image = dataset.images("greenhouse")[0]
        with pytest.raises(UnknownUser):
            dataset.open_layer(42, image.id)
        from pocolabel.errors import UnknownImage

        with pytest.raises(UnknownImage):
            dataset.open_layer(1, 9999)


class TestMutateAndUndo:
    def test_add_then_undo_restores_exactly(self, dataset):
        image = dataset.images("greenhouse")[0]
        layer = dataset.open_layer(1, image.id)
        before = [a for a in layer.annotations]
        dataset.add_annotation(1, image.id, square_annotation())
        dataset.undo(1, image.id)
        assert layer.annotations == before

    def test_delete_unknown_id_leaves_layer_unchanged(self, dataset):
        image = dataset.images("greenhouse")[0]
        dataset.add_annotation(1, image.id, square_annotation())
        layer = dataset.open_layer(1, image.id)
        rev = layer.revision
        with pytest.raises(UnknownAnnotation):
            dataset.delete_annotation(1, image.id, 999)
        assert layer.revision == rev
        assert len(layer.annotations) == 1

    def test_undo_capacity_bounds_history(self, tmp_path):
        store = make_store(tmp_path / "root", undo_capacity=3)
        store.create_dataset("d", CATS)
        write_png(store.dataset("d").root_path / "images" / "a.png")
        image = store.scan_images("d")[0]
        for i in range(5):
            store.add_annotation(1, image.id, square_annotation(origin=(i, i)))
        undone = 0
        while True:
            try:
                store.undo(1, image.id)
                undone += 1
            except NothingToUndo:
                break
        assert undone == 3

    def test_undo_fresh_layer(self, dataset):
        image = dataset.images("greenhouse")[0]
        dataset.open_layer(1, image.id)
        with pytest.raises(NothingToUndo):
            dataset.undo(1, image.id)

    def test_undo_is_lifo(self, dataset):
        image = dataset.images("greenhouse")[0]
        layer = dataset.open_layer(1, image.id)
        dataset.add_annotation(1, image.id, square_annotation(origin=(0, 0)))
        dataset.add_annotation(1, image.id, square_annotation(origin=(3, 3)))
        dataset.undo(1, image.id)
        assert len(layer.annotations) == 1
        assert layer.annotations[0].bbox[:2] == [0, 0]
        dataset.undo(1, image.id)
        assert layer.annotations == []

    def test_modify_is_undoable(self, dataset):
        image = dataset.images("greenhouse")[0]
        stored = dataset.add_annotation(1, image.id, square_annotation())
        moved = square_annotation(ann_id=stored.id, image_id=image.id, origin=(5, 5))
        dataset.modify_annotation(1, image.id, moved)
        layer = dataset.open_layer(1, image.id)
        assert layer.annotations[0].bbox[:2] == [5, 5]
        dataset.undo(1, image.id)
        assert layer.annotations[0].bbox[:2] == [1, 1]

    def test_revision_strictly_increases(self, dataset):
        image = dataset.images("greenhouse")[0]
        layer = dataset.open_layer(1, image.id)
        dataset.add_annotation(1, image.id, square_annotation())
        assert layer.revision == 1
        dataset.undo(1, image.id)
        assert layer.revision == 2


class TestAutosave:
    def test_flush_counts_dirty_layers_only(self, dataset):
        images = dataset.images("greenhouse")
        extra_dir = dataset.dataset("greenhouse").root_path / "images"
        write_png(extra_dir / "x4.png")
        write_png(extra_dir / "x5.png")
        dataset.scan_images("greenhouse")
        images = dataset.images("greenhouse")
        for img in images:  # 5 open layers
            dataset.open_layer(1, img.id)
        dataset.add_annotation(1, images[0].id, square_annotation())
        dataset.add_annotation(1, images[1].id, square_annotation())
        assert dataset.autosave_tick() == 2
        assert dataset.autosave_tick() == 0

    def test_flush_reload_round_trip(self, dataset):
        image = dataset.images("greenhouse")[0]
        rec = square_annotation(origin=(2, 1))
        rec.poco.maturity_stage = "ripe"
        rec.keypoints = [2.5, 1.5, 2]
        rec.num_keypoints = 1
        rec.poco.keypoint_names = ["stem_base"]
        stored = dataset.add_annotation(1, image.id, rec)
        layer = dataset.open_layer(1, image.id)
        snapshot = [a for a in layer.annotations]
        revision = layer.revision
        dataset.autosave_tick()
        dataset.drop_layer_cache()
        reloaded = dataset.open_layer(1, image.id)
        assert reloaded.annotations == snapshot
        assert reloaded.revision == revision
        assert reloaded.annotations[0].id == stored.id

    def test_layer_files_live_under_user_dirs(self, dataset):
        image = dataset.images("greenhouse")[0]
        dataset.add_annotation(1, image.id, square_annotation())
        dataset.autosave_tick()
        path = dataset.dataset("greenhouse").root_path / "layers" / "1" / f"{image.id}.json"
        assert path.exists()
        payload = json.loads(path.read_text())
        assert payload["annotations"][0]["bbox"] == [1, 1, 2.0, 2.0]


class TestExport:
    def test_empty_dataset_exports_clean_doc(self, store):
        store.create_dataset("empty", CATS)
        doc = store.export_dataset("empty", 1)
        assert doc.annotations == []
        assert validate_dataset(doc) == []

    def test_category_filter(self, dataset):
        images = dataset.images("greenhouse")
        dataset.add_annotation(1, images[0].id, square_annotation(category_id=1))
        dataset.add_annotation(1, images[1].id, square_annotation(category_id=2))
        doc = dataset.export_dataset("greenhouse", 1, category_filter=["stem"])
        assert len(doc.annotations) == 1
        assert doc.annotations[0].category_id == 2
        assert [i.id for i in doc.images] == [images[1].id]

    def test_counts_match_layers_after_round_trip(self, dataset):
        images = dataset.images("greenhouse")
        for img in images:
            dataset.add_annotation(1, img.id, square_annotation())
            dataset.add_annotation(1, img.id, square_annotation(origin=(3, 3)))
        doc = parse_dataset(serialize_dataset(dataset.export_dataset("greenhouse", 1)))
        assert len(doc.annotations) == 2 * len(images)
        assert validate_dataset(doc) == []

    def test_export_validates_with_annotations(self, dataset):
        image = dataset.images("greenhouse")[0]
        dataset.add_annotation(1, image.id, square_annotation())
        doc = dataset.export_dataset("greenhouse", 1)
        assert validate_dataset(doc) == []
