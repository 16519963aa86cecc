"""Filesystem-backed annotation store.

Layout under the store root:

    store.json                          users + id counters
    <dataset>/dataset.json              definition + image registry
    <dataset>/images/...                image files (added by the user or
                                        the downloader; scanned, never moved)
    <dataset>/layers/<user>/<image>.json  one annotation layer per user/image
    <dataset>/events.log                append-only JSONL event log

Every user sees their own annotation layer per image.  Mutations are
serialized per layer, snapshots feed a bounded undo stack, and dirty layers
are flushed by ``autosave_tick`` with write-to-temp-then-rename.  The event
log drives per-user statistics and is the only clock consumer, so stats are
a pure function of it.
"""

from __future__ import annotations

import copy
import json
import re
import threading
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .config import StoreConfig
from .errors import (
    IoFailure,
    NameTaken,
    NothingToUndo,
    UnknownAnnotation,
    UnknownDataset,
    UnknownImage,
    UnknownUser,
)
from .geometry import image_size
from .pocoformat import (
    AnnotationRecord,
    CategoryRecord,
    DatasetDoc,
    ImageRecord,
    annotation_from_obj,
    annotation_to_obj,
    export_by_categories,
    image_from_obj,
    image_to_obj,
)

_NAME_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]*$")
_IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")

EVENT_KINDS = ("created", "modified", "deleted", "image_opened", "image_closed")


@dataclass
class UserAccount:
    id: int
    username: str
    role: str = "annotator"  # superuser | annotator
    clone_from: int | None = None  # start blank unless set


@dataclass
class DatasetDef:
    name: str
    root_path: Path
    categories: list[CategoryRecord] = field(default_factory=list)
    metadata_schema: list[tuple[str, str]] = field(default_factory=list)


@dataclass
class AnnotationEvent:
    ts: int  # milliseconds since epoch
    user: int
    image: int
    kind: str
    annotation: int | None = None
    area: float | None = None

    def to_line(self) -> str:
        return json.dumps(
            {"ts": self.ts, "user": self.user, "image": self.image,
             "annotation": self.annotation, "kind": self.kind, "area": self.area},
        )

    @classmethod
    def from_line(cls, line: str) -> "AnnotationEvent":
        obj = json.loads(line)
        return cls(ts=obj["ts"], user=obj["user"], image=obj["image"],
                   kind=obj["kind"], annotation=obj.get("annotation"),
                   area=obj.get("area"))


@dataclass
class UserStats:
    images_annotated: int = 0
    mean_annotation_area: float = 0.0
    mean_seconds_per_annotation: float = 0.0
    mean_seconds_per_image: float = 0.0


@dataclass
class AnnotationLayer:
    user_id: int
    image_id: int
    annotations: list[AnnotationRecord] = field(default_factory=list)
    revision: int = 0
    dirty: bool = False
    undo_stack: list[list[AnnotationRecord]] = field(default_factory=list)
    lock: threading.RLock = field(default_factory=threading.RLock, repr=False, compare=False)

    def annotation_by_id(self, ann_id: int) -> AnnotationRecord | None:
        return next((a for a in self.annotations if a.id == ann_id), None)


def _write_json_atomic(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    try:
        tmp.write_text(json.dumps(obj, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
        tmp.replace(path)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


class AnnotationStore:
    """All dataset, user, layer, and event state under one root directory."""

    def __init__(self, config: StoreConfig, clock=time.time):
        self.config = config
        self.clock = clock
        self.root = Path(config.root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.RLock()
        self._log_lock = threading.Lock()
        self._users: dict[int, UserAccount] = {}
        self._datasets: dict[str, DatasetDef] = {}
        self._images: dict[str, list[ImageRecord]] = {}  # dataset -> registry
        self._image_dataset: dict[int, str] = {}
        self._layers: dict[tuple[int, int], AnnotationLayer] = {}
        self._next_user_id = 1
        self._next_image_id = 1
        self._next_annotation_id = 1
        self._load()
        if not self._users:
            self.add_user("admin", role="superuser")

    # -- persistence of registries ------------------------------------------

    def _store_file(self) -> Path:
        return self.root / "store.json"

    def _load(self) -> None:
        store_file = self._store_file()
        if store_file.exists():
            obj = json.loads(store_file.read_text(encoding="utf-8"))
            self._next_user_id = obj["next_user_id"]
            self._next_image_id = obj["next_image_id"]
            self._next_annotation_id = obj["next_annotation_id"]
            for u in obj["users"]:
                self._users[u["id"]] = UserAccount(
                    id=u["id"], username=u["username"], role=u["role"],
                    clone_from=u.get("clone_from"),
                )
        for def_file in sorted(self.root.glob("*/dataset.json")):
            obj = json.loads(def_file.read_text(encoding="utf-8"))
            name = obj["name"]
            self._datasets[name] = DatasetDef(
                name=name,
                root_path=def_file.parent,
                categories=[_category_from_obj(c) for c in obj["categories"]],
                metadata_schema=[tuple(p) for p in obj.get("metadata_schema", [])],
            )
            registry = [image_from_obj(i) for i in obj.get("images", [])]
            self._images[name] = registry
            for rec in registry:
                self._image_dataset[rec.id] = name

    def _save_store(self) -> None:
        _write_json_atomic(self._store_file(), {
            "next_user_id": self._next_user_id,
            "next_image_id": self._next_image_id,
            "next_annotation_id": self._next_annotation_id,
            "users": [asdict(u) for u in self._users.values()],
        })

    def _save_dataset(self, name: str) -> None:
        ds = self._datasets[name]
        _write_json_atomic(ds.root_path / "dataset.json", {
            "name": ds.name,
            "categories": [_category_to_obj(c) for c in ds.categories],
            "metadata_schema": [list(p) for p in ds.metadata_schema],
            "images": [image_to_obj(i) for i in self._images[name]],
        })

    # -- users ----------------------------------------------------------------

    def add_user(self, username: str, role: str = "annotator",
                 clone_from: int | None = None) -> UserAccount:
        with self._lock:
            if any(u.username == username for u in self._users.values()):
                raise NameTaken(f"username '{username}' already exists")
            if role not in ("superuser", "annotator"):
                raise ValueError(f"unknown role {role!r}")
            if clone_from is not None and clone_from not in self._users:
                raise UnknownUser(f"clone_from user {clone_from} does not exist")
            user = UserAccount(id=self._next_user_id, username=username,
                               role=role, clone_from=clone_from)
            if clone_from == user.id:
                raise ValueError("user cannot clone from itself")
            self._next_user_id += 1
            self._users[user.id] = user
            self._save_store()
            return user

    def users(self) -> list[UserAccount]:
        with self._lock:
            return sorted(self._users.values(), key=lambda u: u.id)

    def user(self, user_id: int) -> UserAccount:
        with self._lock:
            if user_id not in self._users:
                raise UnknownUser(f"user {user_id} does not exist")
            return self._users[user_id]

    def find_user(self, ref: str) -> UserAccount:
        """Look a user up by numeric id or username."""
        with self._lock:
            if ref.isdigit() and int(ref) in self._users:
                return self._users[int(ref)]
            for u in self._users.values():
                if u.username == ref:
                    return u
        raise UnknownUser(f"user {ref!r} does not exist")

    # -- datasets ---------------------------------------------------------------

    def create_dataset(self, name: str, categories: list[CategoryRecord],
                       metadata_schema: list[tuple[str, str]] | None = None) -> DatasetDef:
        with self._lock:
            if not _NAME_RE.match(name):
                raise ValueError(f"dataset name {name!r} is not filesystem-safe")
            if name in self._datasets:
                raise NameTaken(f"dataset '{name}' already exists")
            ids = [c.id for c in categories]
            names = [c.name for c in categories]
            if len(set(ids)) != len(ids) or len(set(names)) != len(names):
                raise ValueError("category ids and names must be unique")
            ds = DatasetDef(
                name=name,
                root_path=self.root / name,
                categories=list(categories),
                metadata_schema=list(metadata_schema or []),
            )
            try:
                (ds.root_path / "images").mkdir(parents=True)
                (ds.root_path / "layers").mkdir(exist_ok=True)
            except OSError as exc:
                raise IoFailure(f"cannot create dataset directory: {exc}") from exc
            self._datasets[name] = ds
            self._images[name] = []
            self._save_dataset(name)
            return ds

    def datasets(self) -> list[DatasetDef]:
        with self._lock:
            return sorted(self._datasets.values(), key=lambda d: d.name)

    def dataset(self, name: str) -> DatasetDef:
        with self._lock:
            if name not in self._datasets:
                raise UnknownDataset(f"dataset '{name}' does not exist")
            return self._datasets[name]

    # -- image registry ------------------------------------------------------

    def scan_images(self, name: str) -> list[ImageRecord]:
        """Register new PNG/JPEG files under <dataset>/images; returns them.

        Ids are stable across rescans; files that vanished are marked
        missing in their poco block but stay registered.  Path segments
        below images/ become directory labels.
        """
        ds = self.dataset(name)
        images_dir = ds.root_path / "images"
        with self._lock:
            registry = self._images[name]
            by_path = {rec.file_name: rec for rec in registry}
            seen: set[str] = set()
            added: list[ImageRecord] = []
            try:
                files = sorted(
                    p for p in images_dir.rglob("*")
                    if p.is_file() and p.suffix.lower() in _IMAGE_SUFFIXES
                )
            except OSError as exc:
                raise IoFailure(f"cannot scan {images_dir}: {exc}") from exc
            for path in files:
                rel = path.relative_to(images_dir).as_posix()
                seen.add(rel)
                if rel in by_path:
                    by_path[rel].poco.pop("missing", None)
                    continue
                try:
                    width, height = image_size(path)
                except OSError as exc:
                    raise IoFailure(f"cannot read image header {path}: {exc}") from exc
                poco: dict = {}
                labels = list(Path(rel).parts[:-1])
                if labels:
                    poco["directory_labels"] = labels
                rec = ImageRecord(
                    id=self._next_image_id, file_name=rel,
                    width=width, height=height, poco=poco,
                )
                self._next_image_id += 1
                registry.append(rec)
                self._image_dataset[rec.id] = name
                added.append(rec)
            for rec in registry:
                if rec.file_name not in seen:
                    rec.poco["missing"] = True
            self._save_dataset(name)
            self._save_store()
            return added

    def images(self, name: str) -> list[ImageRecord]:
        self.dataset(name)
        with self._lock:
            return list(self._images[name])

    def image(self, image_id: int) -> ImageRecord:
        with self._lock:
            name = self._image_dataset.get(image_id)
            if name is None:
                raise UnknownImage(f"image {image_id} does not exist")
            return next(r for r in self._images[name] if r.id == image_id)

    def image_dataset(self, image_id: int) -> DatasetDef:
        with self._lock:
            name = self._image_dataset.get(image_id)
            if name is None:
                raise UnknownImage(f"image {image_id} does not exist")
            return self._datasets[name]

    def image_path(self, image_id: int) -> Path:
        rec = self.image(image_id)
        return self.image_dataset(image_id).root_path / "images" / rec.file_name

    # -- events ------------------------------------------------------------------

    def _emit(self, dataset: DatasetDef, user_id: int, image_id: int, kind: str,
              annotation: int | None = None, area: float | None = None) -> None:
        event = AnnotationEvent(
            ts=int(self.clock() * 1000), user=user_id, image=image_id,
            kind=kind, annotation=annotation, area=area,
        )
        log = dataset.root_path / "events.log"
        with self._log_lock:
            try:
                with log.open("a", encoding="utf-8") as fh:
                    fh.write(event.to_line() + "\n")
            except OSError as exc:
                raise IoFailure(f"cannot append to {log}: {exc}") from exc

    def events(self, dataset_name: str | None = None) -> list[AnnotationEvent]:
        defs = [self.dataset(dataset_name)] if dataset_name else self.datasets()
        out: list[AnnotationEvent] = []
        for ds in defs:
            log = ds.root_path / "events.log"
            if log.exists():
                for line in log.read_text(encoding="utf-8").splitlines():
                    if line.strip():
                        out.append(AnnotationEvent.from_line(line))
        out.sort(key=lambda e: e.ts)
        return out

    # -- layers ---------------------------------------------------------------

    def _layer_file(self, dataset: DatasetDef, user_id: int, image_id: int) -> Path:
        return dataset.root_path / "layers" / str(user_id) / f"{image_id}.json"

    def _load_layer(self, dataset: DatasetDef, user_id: int, image_id: int) -> AnnotationLayer | None:
        path = self._layer_file(dataset, user_id, image_id)
        if not path.exists():
            return None
        obj = json.loads(path.read_text(encoding="utf-8"))
        return AnnotationLayer(
            user_id=user_id,
            image_id=image_id,
            annotations=[annotation_from_obj(a) for a in obj["annotations"]],
            revision=obj.get("revision", 0),
        )

    def _peek_layer(self, user_id: int, image_id: int) -> AnnotationLayer | None:
        """Current layer if it exists in memory or on disk; no events, no create."""
        with self._lock:
            layer = self._layers.get((user_id, image_id))
            if layer is not None:
                return layer
            dataset = self.image_dataset(image_id)
            layer = self._load_layer(dataset, user_id, image_id)
            if layer is not None:
                self._layers[(user_id, image_id)] = layer
            return layer

    def ensure_layer(self, user_id: int, image_id: int) -> AnnotationLayer:
        """The user's layer for an image, created silently when absent.

        A fresh layer starts empty, or as a deep copy (fresh annotation ids)
        of the clone-source user's current layer.  Cloned annotations emit
        no events: statistics measure work the user authored.
        """
        user = self.user(user_id)
        self.image(image_id)
        with self._lock:
            layer = self._peek_layer(user_id, image_id)
            if layer is None:
                annotations: list[AnnotationRecord] = []
                if user.clone_from is not None:
                    source = self._peek_layer(user.clone_from, image_id)
                    if source is not None:
                        for ann in source.annotations:
                            clone = copy.deepcopy(ann)
                            clone.id = self._next_annotation_id
                            self._next_annotation_id += 1
                            annotations.append(clone)
                        self._save_store()
                layer = AnnotationLayer(
                    user_id=user_id, image_id=image_id,
                    annotations=annotations, dirty=bool(annotations),
                )
                self._layers[(user_id, image_id)] = layer
            return layer

    def open_layer(self, user_id: int, image_id: int) -> AnnotationLayer:
        """ensure_layer plus an image_opened event: one call per viewing
        session, paired with close_image for the statistics clock."""
        layer = self.ensure_layer(user_id, image_id)
        self._emit(self.image_dataset(image_id), user_id, image_id, "image_opened")
        return layer

    def close_image(self, user_id: int, image_id: int) -> None:
        self.user(user_id)
        dataset = self.image_dataset(image_id)
        self._emit(dataset, user_id, image_id, "image_closed")

    def new_annotation_id(self) -> int:
        with self._lock:
            ann_id = self._next_annotation_id
            self._next_annotation_id += 1
            self._save_store()
            return ann_id

    def _push_undo(self, layer: AnnotationLayer) -> None:
        layer.undo_stack.append(copy.deepcopy(layer.annotations))
        while len(layer.undo_stack) > self.config.undo_capacity:
            layer.undo_stack.pop(0)

    def add_annotation(self, user_id: int, image_id: int,
                       record: AnnotationRecord) -> AnnotationRecord:
        dataset = self.image_dataset(image_id)
        layer = self.ensure_layer(user_id, image_id)
        with layer.lock:
            record = replace(record, image_id=image_id)
            if record.id == 0 or any(a.id == record.id for a in layer.annotations):
                record.id = self.new_annotation_id()
            self._push_undo(layer)
            layer.annotations.append(record)
            layer.revision += 1
            layer.dirty = True
        self._emit(dataset, user_id, image_id, "created",
                   annotation=record.id, area=record.area)
        return record

    def modify_annotation(self, user_id: int, image_id: int,
                          record: AnnotationRecord) -> AnnotationRecord:
        dataset = self.image_dataset(image_id)
        layer = self.ensure_layer(user_id, image_id)
        with layer.lock:
            index = next((i for i, a in enumerate(layer.annotations) if a.id == record.id), None)
            if index is None:
                raise UnknownAnnotation(f"annotation {record.id} not in layer")
            self._push_undo(layer)
            layer.annotations[index] = record
            layer.revision += 1
            layer.dirty = True
        self._emit(dataset, user_id, image_id, "modified",
                   annotation=record.id, area=record.area)
        return record

    def delete_annotation(self, user_id: int, image_id: int, ann_id: int) -> None:
        dataset = self.image_dataset(image_id)
        layer = self.ensure_layer(user_id, image_id)
        with layer.lock:
            victim = layer.annotation_by_id(ann_id)
            if victim is None:
                raise UnknownAnnotation(f"annotation {ann_id} not in layer")
            self._push_undo(layer)
            layer.annotations.remove(victim)
            layer.revision += 1
            layer.dirty = True
        self._emit(dataset, user_id, image_id, "deleted",
                   annotation=ann_id, area=victim.area)

    def undo(self, user_id: int, image_id: int) -> AnnotationLayer:
        """Restore the newest snapshot; the restore is itself a new revision.

        Inverse events are emitted for whatever the restore changed so the
        event log stays a faithful history of layer state.
        """
        dataset = self.image_dataset(image_id)
        layer = self.ensure_layer(user_id, image_id)
        with layer.lock:
            if not layer.undo_stack:
                raise NothingToUndo(f"layer {user_id}/{image_id} has no undo history")
            before = layer.annotations
            restored = layer.undo_stack.pop()
            layer.annotations = restored
            layer.revision += 1
            layer.dirty = True
            events = _diff_events(before, restored)
        for kind, ann_id, area in events:
            self._emit(dataset, user_id, image_id, kind, annotation=ann_id, area=area)
        return layer

    # -- autosave -----------------------------------------------------------------

    def autosave_tick(self) -> int:
        """Flush every dirty layer to disk; returns how many were written."""
        with self._lock:
            layers = list(self._layers.items())
        flushed = 0
        failures: list[str] = []
        for (user_id, image_id), layer in layers:
            with layer.lock:
                if not layer.dirty:
                    continue
                payload = {
                    "user_id": user_id,
                    "image_id": image_id,
                    "revision": layer.revision,
                    "annotations": [annotation_to_obj(a) for a in layer.annotations],
                }
                dataset = self.image_dataset(image_id)
                try:
                    _write_json_atomic(self._layer_file(dataset, user_id, image_id), payload)
                except IoFailure as exc:
                    failures.append(str(exc))
                    continue
                layer.dirty = False
                flushed += 1
        if failures:
            raise IoFailure(f"flushed {flushed} layers; failures: " + "; ".join(failures))
        return flushed

    def drop_layer_cache(self) -> None:
        """Forget in-memory layers (tests use this to prove reload fidelity)."""
        with self._lock:
            self._layers.clear()

    # -- statistics -----------------------------------------------------------------

    def compute_stats(self, user_id: int) -> UserStats:
        self.user(user_id)
        events = [e for e in self.events() if e.user == user_id]
        return stats_from_events(events)

    # -- export ------------------------------------------------------------------------

    def export_dataset(self, name: str, user_id: int,
                       category_filter: list[str] | None = None) -> DatasetDoc:
        ds = self.dataset(name)
        self.user(user_id)
        annotations: list[AnnotationRecord] = []
        for img in self.images(name):
            layer = self._peek_layer(user_id, img.id)
            if layer is not None:
                with layer.lock:
                    annotations.extend(copy.deepcopy(layer.annotations))
        doc = DatasetDoc(
            info={"description": name},
            images=[copy.deepcopy(i) for i in self.images(name)],
            annotations=annotations,
            categories=[copy.deepcopy(c) for c in ds.categories],
        )
        if category_filter:
            doc = export_by_categories(doc, category_filter)
        return doc

    def annotation_counts(self, name: str, user_id: int | None = None) -> dict[int, int]:
        """Per-image annotation counts for the grid view."""
        counts: dict[int, int] = {}
        for img in self.images(name):
            total = 0
            user_ids = [user_id] if user_id is not None else [u.id for u in self.users()]
            for uid in user_ids:
                layer = self._peek_layer(uid, img.id)
                if layer is not None:
                    total += len(layer.annotations)
            counts[img.id] = total
        return counts


def _diff_events(before: list[AnnotationRecord], after: list[AnnotationRecord]):
    """Inverse-operation events for an undo: what changed between states."""
    before_by_id = {a.id: a for a in before}
    after_by_id = {a.id: a for a in after}
    events = []
    for ann_id, ann in before_by_id.items():
        if ann_id not in after_by_id:
            events.append(("deleted", ann_id, ann.area))
    for ann_id, ann in after_by_id.items():
        if ann_id not in before_by_id:
            events.append(("created", ann_id, ann.area))
        elif before_by_id[ann_id] != ann:
            events.append(("modified", ann_id, ann.area))
    return events


def stats_from_events(events: list[AnnotationEvent]) -> UserStats:
    """Statistics as a pure function of one user's event stream.

    * images annotated: images whose created annotations were not all
      deleted later in the log
    * annotation area: mean over creation events
    * seconds per annotation: mean gap between consecutive created/modified
      events inside a completed image session
    * seconds per image: mean open-to-close span; an open without a close
      contributes nothing
    """
    events = sorted(events, key=lambda e: e.ts)
    created: dict[int, set] = {}
    deleted: dict[int, set] = {}
    areas: list[float] = []
    sessions: list[tuple[int, int, int]] = []  # (image, t_open, t_close)
    open_at: dict[int, int] = {}
    for e in events:
        if e.kind == "created":
            created.setdefault(e.image, set()).add(e.annotation)
            if e.area is not None:
                areas.append(e.area)
        elif e.kind == "deleted":
            deleted.setdefault(e.image, set()).add(e.annotation)
        elif e.kind == "image_opened":
            open_at[e.image] = e.ts
        elif e.kind == "image_closed":
            if e.image in open_at:
                sessions.append((e.image, open_at.pop(e.image), e.ts))

    surviving = sum(
        1 for image, ids in created.items() if ids - deleted.get(image, set())
    )

    gaps: list[float] = []
    for image, t0, t1 in sessions:
        times = [e.ts for e in events
                 if e.image == image and e.kind in ("created", "modified")
                 and t0 <= e.ts <= t1]
        gaps.extend((b - a) / 1000.0 for a, b in zip(times, times[1:]))

    spans = [(t1 - t0) / 1000.0 for _, t0, t1 in sessions]
    return UserStats(
        images_annotated=surviving,
        mean_annotation_area=sum(areas) / len(areas) if areas else 0.0,
        mean_seconds_per_annotation=sum(gaps) / len(gaps) if gaps else 0.0,
        mean_seconds_per_image=sum(spans) / len(spans) if spans else 0.0,
    )


def _category_to_obj(cat: CategoryRecord) -> dict:
    out: dict = {"id": cat.id, "name": cat.name}
    if cat.supercategory is not None:
        out["supercategory"] = cat.supercategory
    if cat.poco:
        out["poco"] = cat.poco
    out.update(cat.extra)
    return out


def _category_from_obj(obj: dict) -> CategoryRecord:
    return CategoryRecord(
        id=obj["id"], name=obj["name"],
        supercategory=obj.get("supercategory"),
        poco=dict(obj.get("poco", {})),
        extra={k: v for k, v in obj.items()
               if k not in ("id", "name", "supercategory", "poco")},
    )
