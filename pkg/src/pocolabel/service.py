"""HTTP API binding the store, geometry tools, format layer, and model clients.

All geometry runs server-side; the browser UI and automation clients drive
these endpoints with JSON bodies and receive poco-format fragments back.
Handlers are synchronous so FastAPI dispatches them to a thread pool:
per-layer locking in the store serializes conflicting mutations while slow
tool calls (flood fill on large images) never block unrelated requests.
"""

from __future__ import annotations

import contextlib
import socket
import threading
import time
from contextlib import asynccontextmanager
from dataclasses import replace

import uvicorn
from fastapi import FastAPI, Request, Response
from fastapi.responses import FileResponse, JSONResponse

from .clients import (
    DextrClient,
    DextrRequest,
    ExtremePoints,
    SearchSpec,
    SegmenterClient,
    fetch_images,
)
from .config import ApiConfig
from .errors import (
    BindFailure,
    ConflictError,
    EndpointUnreachable,
    IntegrityError,
    InvalidResponse,
    IoFailure,
    ModelError,
    NameTaken,
    NothingToUndo,
    ParseError,
    PocoError,
    ProviderUnavailable,
    QuotaExceeded,
    SchemaError,
    SeedOutOfBounds,
    EmptyRegion,
    EmptySegmentation,
    ToolRejected,
    TooFewPoints,
    UnknownAnnotation,
    UnknownCategory,
    UnknownCategoryName,
    UnknownDataset,
    UnknownImage,
    UnknownTarget,
    UnknownUser,
)
from .geometry import (
    BrushParams,
    FloodParams,
    Region,
    Rle,
    brush_stroke_to_region,
    flood_region,
    load_rgb,
    region_clip,
    region_subtract,
    region_union,
    repair_ring,
    should_autoclose,
    simplify_stroke,
)
from .pocoformat import (
    AnnotationRecord,
    CategoryRecord,
    PocoExt,
    annotation_from_obj,
    annotation_to_obj,
    derive_geometry,
    image_to_obj,
    region_to_segmentation,
    segmentation_to_region,
    serialize_dataset,
    skeleton_violations,
)
from .store import AnnotationLayer, AnnotationStore, UserAccount

_STATUS = {
    UnknownDataset: 404, UnknownUser: 404, UnknownImage: 404,
    UnknownAnnotation: 404, UnknownTarget: 404, UnknownCategory: 404,
    NameTaken: 409, ConflictError: 409, NothingToUndo: 409,
    SchemaError: 422, IntegrityError: 422, ParseError: 422,
    TooFewPoints: 422, ToolRejected: 422, SeedOutOfBounds: 422,
    EmptyRegion: 422, EmptySegmentation: 422, UnknownCategoryName: 422,
    InvalidResponse: 502, EndpointUnreachable: 502, ModelError: 502,
    ProviderUnavailable: 502, QuotaExceeded: 429, IoFailure: 500,
}

TOOLS = ("freeform", "flood", "brush", "erase", "dextr")


def _layer_payload(layer: AnnotationLayer) -> dict:
    with layer.lock:
        return {
            "user_id": layer.user_id,
            "image_id": layer.image_id,
            "revision": layer.revision,
            "annotations": [annotation_to_obj(a) for a in layer.annotations],
        }


def _user_payload(user: UserAccount) -> dict:
    return {"id": user.id, "username": user.username, "role": user.role,
            "clone_from": user.clone_from}


class ToolBox:
    """Dispatches tool requests onto geometry / model-client operations."""

    def __init__(self, store: AnnotationStore, dextr: DextrClient,
                 segmenter: SegmenterClient):
        self.store = store
        self.dextr = dextr
        self.segmenter = segmenter

    def apply(self, image_id: int, user_id: int, body: dict) -> AnnotationRecord:
        tool = body.get("tool")
        if tool not in TOOLS:
            raise SchemaError(f"tool must be one of {', '.join(TOOLS)}")
        image = self.store.image(image_id)
        self.store.ensure_layer(user_id, image_id)
        if tool == "erase":
            return self._erase(image, user_id, body)
        region = self._create_region(image, body, tool)
        target_id = body.get("target_annotation_id")
        if tool == "brush" and target_id is not None:
            return self._merge_into(image, user_id, target_id, region)
        category_id = self._category_for(image, body)
        record = AnnotationRecord(
            id=0, image_id=image_id, category_id=category_id,
            segmentation=region_to_segmentation(region, image.width, image.height),
        )
        record = derive_geometry(record, image)
        return self.store.add_annotation(user_id, image_id, record)

    # -- region construction ---------------------------------------------------

    def _create_region(self, image, body: dict, tool: str) -> Region:
        if tool == "freeform":
            return self._freeform_region(image, body)
        if tool == "flood":
            return self._flood_region(image, body)
        if tool == "brush":
            return self._brush_region(image, body)
        if tool == "dextr":
            return self._dextr_region(image, body)
        raise SchemaError(f"tool {tool} cannot create a region")

    def _freeform_region(self, image, body: dict) -> Region:
        stroke = _points(body, "stroke")
        epsilon = float(body.get("epsilon", 1.0))
        min_close = float(body.get("min_close_distance", 10.0))
        if not should_autoclose(stroke, min_close):
            raise ToolRejected(
                "stroke endpoints are farther apart than min_close_distance"
            )
        ring = simplify_stroke(stroke, epsilon)
        region = repair_ring(ring)  # self-crossings resolved even-odd
        return region_clip(region, image.width, image.height)

    def _flood_region(self, image, body: dict) -> Region:
        seed = body.get("seed")
        if not isinstance(seed, list) or len(seed) != 2:
            raise SchemaError("flood needs seed: [x, y]")
        params = FloodParams(
            color_threshold=float(body.get("color_threshold", 10.0)),
            blur_sigma=float(body.get("blur_sigma", 0.0)),
        )
        pixels = load_rgb(self.store.image_path(image.id))
        return flood_region(pixels, (float(seed[0]), float(seed[1])), params)

    def _brush_region(self, image, body: dict) -> Region:
        path = _points(body, "path")
        params = BrushParams(radius=float(body.get("radius", 8.0)))
        return region_clip(brush_stroke_to_region(path, params), image.width, image.height)

    def _dextr_region(self, image, body: dict) -> Region:
        raw = body.get("points")
        if not isinstance(raw, dict):
            raise SchemaError("dextr needs points: {left, right, top, bottom}")
        try:
            points = ExtremePoints(
                left=_pair(raw, "left"), right=_pair(raw, "right"),
                top=_pair(raw, "top"), bottom=_pair(raw, "bottom"),
            )
        except ValueError as exc:
            raise SchemaError(str(exc)) from exc
        padding = float(body.get("padding", self.dextr.default_padding))
        request = DextrRequest(image_id=image.id, points=points, padding=padding)
        return self.dextr.segment(request, image)

    # -- mutations on existing annotations ------------------------------------

    def _merge_into(self, image, user_id: int, target_id: int,
                    addition: Region) -> AnnotationRecord:
        target = self._target(user_id, image.id, target_id)
        current = segmentation_to_region(target.segmentation) if target.segmentation else Region()
        merged = region_union(current, addition)
        return self._store_region(image, user_id, target, merged)

    def _erase(self, image, user_id: int, body: dict) -> AnnotationRecord:
        target_id = body.get("target_annotation_id")
        if target_id is None:
            raise SchemaError("erase needs target_annotation_id")
        target = self._target(user_id, image.id, target_id)
        if "region" in body:
            erase_region = segmentation_to_region(_polygon_lists(body["region"]))
        elif "path" in body:
            erase_region = brush_stroke_to_region(
                _points(body, "path"), BrushParams(radius=float(body.get("radius", 8.0)))
            )
        elif "seed" in body:
            erase_region = self._flood_region(image, body)
        else:
            raise SchemaError("erase needs one of region, path, or seed")
        current = segmentation_to_region(target.segmentation) if target.segmentation else Region()
        remaining = region_subtract(current, erase_region)
        return self._store_region(image, user_id, target, remaining)

    def _store_region(self, image, user_id: int, target: AnnotationRecord,
                      region: Region) -> AnnotationRecord:
        poco = replace(target.poco, extra=dict(target.poco.extra))
        if region.is_empty or region.area <= 1e-6:
            # fully erased: keep the record, flag it, empty raster mask
            poco.extra["empty"] = True
            record = replace(
                target,
                segmentation=Rle(width=image.width, height=image.height,
                                 counts=(image.width * image.height,)),
                bbox=[0.0, 0.0, 0.0, 0.0], area=0.0, iscrowd=1, poco=poco,
            )
            return self.store.modify_annotation(user_id, image.id, record)
        poco.extra.pop("empty", None)
        record = replace(
            target, poco=poco,
            segmentation=region_to_segmentation(region, image.width, image.height),
        )
        record = derive_geometry(record, image)
        return self.store.modify_annotation(user_id, image.id, record)

    def _target(self, user_id: int, image_id: int, target_id: int) -> AnnotationRecord:
        layer = self.store.ensure_layer(user_id, image_id)
        with layer.lock:
            target = layer.annotation_by_id(int(target_id))
        if target is None:
            raise UnknownTarget(f"annotation {target_id} not in layer")
        return target

    def _category_for(self, image, body: dict) -> int:
        dataset = self.store.image_dataset(image.id)
        category_id = body.get("category_id")
        if category_id is None:
            raise SchemaError("tool request needs category_id")
        if all(c.id != category_id for c in dataset.categories):
            raise UnknownCategory(f"category {category_id} not in dataset '{dataset.name}'")
        return int(category_id)

    def auto_annotate(self, image_id: int, user_id: int) -> list[AnnotationRecord]:
        image = self.store.image(image_id)
        dataset = self.store.image_dataset(image_id)
        self.store.ensure_layer(user_id, image_id)
        names = {c.name: c.id for c in dataset.categories}
        detections = self.segmenter.auto_annotate(image, list(names))
        created = []
        for det in detections:
            record = AnnotationRecord(
                id=0, image_id=image_id, category_id=names[det.category_name],
                segmentation=region_to_segmentation(det.region, image.width, image.height),
                poco=PocoExt(extra={"confidence": det.confidence}),
            )
            record = derive_geometry(record, image)
            created.append(self.store.add_annotation(user_id, image_id, record))
        return created


def _points(body: dict, key: str) -> list:
    raw = body.get(key)
    if not isinstance(raw, list) or not raw or not all(
        isinstance(p, list) and len(p) == 2 for p in raw
    ):
        raise SchemaError(f"{key} must be a non-empty list of [x, y] points")
    return [(float(x), float(y)) for x, y in raw]


def _pair(obj: dict, key: str) -> tuple[float, float]:
    raw = obj.get(key)
    if not isinstance(raw, list) or len(raw) != 2:
        raise SchemaError(f"points.{key} must be [x, y]")
    return (float(raw[0]), float(raw[1]))


def _polygon_lists(raw) -> list:
    if not isinstance(raw, list) or not all(isinstance(r, list) for r in raw):
        raise SchemaError("region must be a list of flat coordinate rings")
    return raw


class AutosaveLoop:
    def __init__(self, store: AnnotationStore, period: float):
        self.store = store
        self.period = period
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._run, daemon=True)

    def _run(self):
        while not self._stop.wait(self.period):
            with contextlib.suppress(IoFailure):
                self.store.autosave_tick()

    def start(self):
        self._thread.start()

    def stop(self):
        self._stop.set()
        self._thread.join(timeout=5)


def create_app(config: ApiConfig, store: AnnotationStore | None = None) -> FastAPI:
    store = store or AnnotationStore(config.store)
    dextr = DextrClient(config.clients.dextr_url, timeout=config.clients.timeout,
                        default_padding=config.clients.default_padding)
    segmenter = SegmenterClient(config.clients.segmenter_url,
                                timeout=config.clients.timeout,
                                confidence_threshold=config.clients.confidence_threshold)
    toolbox = ToolBox(store, dextr, segmenter)
    autosave = AutosaveLoop(store, config.store.autosave_period)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        autosave.start()
        yield
        autosave.stop()
        with contextlib.suppress(IoFailure):
            store.autosave_tick()

    app = FastAPI(title="pocolabel", version="0.1.0", lifespan=lifespan)
    app.state.store = store
    app.state.config = config

    @app.exception_handler(PocoError)
    def _poco_error(request: Request, exc: PocoError):
        status = next(
            (code for cls, code in _STATUS.items() if isinstance(exc, cls)), 500
        )
        return JSONResponse(status_code=status,
                            content={"error": exc.code, "message": str(exc)})

    @app.exception_handler(ValueError)
    def _value_error(request: Request, exc: ValueError):
        return JSONResponse(status_code=422,
                            content={"error": "invalid_value", "message": str(exc)})

    def authorize(request: Request, acting_user: int | None = None) -> None:
        if config.auth_mode != "token":
            return
        header = request.headers.get("Authorization", "")
        token = header.removeprefix("Bearer ").strip()
        user_id = config.tokens.get(token)
        if user_id is None:
            raise UnknownUser("missing or invalid bearer token")
        if acting_user is not None and user_id != acting_user:
            if store.user(user_id).role != "superuser":
                raise UnknownUser(f"token does not grant access to user {acting_user}")

    # -- health and users --------------------------------------------------

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.get("/users")
    def list_users(request: Request):
        authorize(request)
        return [_user_payload(u) for u in store.users()]

    @app.post("/users", status_code=201)
    def create_user(body: dict, request: Request):
        authorize(request)
        user = store.add_user(
            body.get("username", ""),
            role=body.get("role", "annotator"),
            clone_from=body.get("clone_from"),
        )
        return _user_payload(user)

    @app.get("/users/{user_id}/stats")
    def user_stats(user_id: int, request: Request):
        authorize(request)
        stats = store.compute_stats(user_id)
        return {
            "images_annotated": stats.images_annotated,
            "mean_annotation_area": stats.mean_annotation_area,
            "mean_seconds_per_annotation": stats.mean_seconds_per_annotation,
            "mean_seconds_per_image": stats.mean_seconds_per_image,
        }

    # -- datasets ------------------------------------------------------------

    @app.get("/datasets")
    def list_datasets(request: Request):
        authorize(request)
        return [_dataset_payload(ds) for ds in store.datasets()]

    def _dataset_payload(ds):
        from .store import _category_to_obj

        return {
            "name": ds.name,
            "categories": [_category_to_obj(c) for c in ds.categories],
            "metadata_schema": [list(p) for p in ds.metadata_schema],
        }

    @app.post("/datasets", status_code=201)
    def create_dataset(body: dict, request: Request):
        authorize(request)
        raw_cats = body.get("categories", [])
        categories = []
        for i, cat in enumerate(raw_cats, start=1):
            if not isinstance(cat, dict) or not cat.get("name"):
                raise SchemaError("categories need at least a name")
            poco = {"type": cat["type"]} if cat.get("type") else dict(cat.get("poco", {}))
            categories.append(CategoryRecord(
                id=int(cat.get("id", i)), name=cat["name"],
                supercategory=cat.get("supercategory"), poco=poco,
            ))
        ds = store.create_dataset(
            body.get("name", ""),
            categories,
            metadata_schema=[tuple(p) for p in body.get("metadata_schema", [])],
        )
        return _dataset_payload(ds)

    @app.get("/datasets/{name}/images")
    def dataset_images(name: str, request: Request, user: int | None = None):
        authorize(request)
        counts = store.annotation_counts(name, user)
        out = []
        for rec in store.images(name):
            obj = image_to_obj(rec)
            obj["annotation_count"] = counts.get(rec.id, 0)
            out.append(obj)
        return out

    @app.post("/datasets/{name}/scan")
    def scan_dataset(name: str, request: Request):
        authorize(request)
        added = store.scan_images(name)
        return {"added": [image_to_obj(r) for r in added], "count": len(added)}

    @app.post("/datasets/{name}/generate")
    def generate(name: str, body: dict, request: Request):
        authorize(request)
        spec = SearchSpec(
            keyword=str(body.get("keyword", "")),
            count=int(body.get("count", 1)),
            provider=body.get("provider") or config.clients.search_provider or "",
        )
        added = fetch_images(spec, name, store)
        return {"added": [image_to_obj(r) for r in added], "count": len(added)}

    @app.get("/datasets/{name}/export")
    def export(name: str, request: Request, user: int, categories: str | None = None):
        authorize(request)
        category_filter = [c for c in categories.split(",") if c] if categories else None
        doc = store.export_dataset(name, user, category_filter=category_filter)
        return Response(content=serialize_dataset(doc), media_type="application/json")

    # -- images and layers ------------------------------------------------------

    @app.get("/images/{image_id}/file")
    def image_file(image_id: int, request: Request):
        authorize(request)
        path = store.image_path(image_id)
        if not path.exists():
            raise UnknownImage(f"image file for {image_id} is missing on disk")
        media = "image/png" if path.suffix.lower() == ".png" else "image/jpeg"
        return FileResponse(path, media_type=media)

    @app.get("/images/{image_id}/layers/{user_id}/annotations")
    def layer_annotations(image_id: int, user_id: int, request: Request):
        authorize(request, user_id)
        return _layer_payload(store.open_layer(user_id, image_id))

    @app.post("/images/{image_id}/layers/{user_id}/annotations", status_code=201)
    def create_annotation(image_id: int, user_id: int, body: dict, request: Request):
        authorize(request, user_id)
        image = store.image(image_id)
        store.ensure_layer(user_id, image_id)
        obj = dict(body)
        obj.setdefault("id", 0)
        obj["image_id"] = image_id
        record = annotation_from_obj(obj)
        _check_skeleton(record)
        if record.segmentation and record.bbox is None and record.area is None:
            record = derive_geometry(record, image)
        return annotation_to_obj(store.add_annotation(user_id, image_id, record))

    _PATCHABLE = ("category_id", "segmentation", "bbox", "area", "keypoints",
                  "num_keypoints", "poco", "iscrowd")

    @app.patch("/images/{image_id}/layers/{user_id}/annotations/{ann_id}")
    def patch_annotation(image_id: int, user_id: int, ann_id: int, body: dict,
                         request: Request):
        authorize(request, user_id)
        image = store.image(image_id)
        layer = store.ensure_layer(user_id, image_id)
        with layer.lock:
            current = layer.annotation_by_id(ann_id)
            if current is None:
                raise UnknownAnnotation(f"annotation {ann_id} not in layer")
            obj = annotation_to_obj(current)
        for key in body:
            if key not in _PATCHABLE:
                raise SchemaError(f"field '{key}' cannot be patched")
        obj.update({k: v for k, v in body.items() if k in _PATCHABLE})
        record = annotation_from_obj(obj)
        _check_skeleton(record)
        if "segmentation" in body and "bbox" not in body and "area" not in body:
            record = derive_geometry(record, image)
        return annotation_to_obj(store.modify_annotation(user_id, image_id, record))

    @app.delete("/images/{image_id}/layers/{user_id}/annotations/{ann_id}")
    def delete_annotation(image_id: int, user_id: int, ann_id: int, request: Request):
        authorize(request, user_id)
        store.delete_annotation(user_id, image_id, ann_id)
        return {"deleted": ann_id}

    @app.post("/images/{image_id}/layers/{user_id}/tool", status_code=201)
    def apply_tool(image_id: int, user_id: int, body: dict, request: Request):
        authorize(request, user_id)
        return annotation_to_obj(toolbox.apply(image_id, user_id, body))

    @app.post("/images/{image_id}/layers/{user_id}/undo")
    def undo(image_id: int, user_id: int, request: Request):
        authorize(request, user_id)
        return _layer_payload(store.undo(user_id, image_id))

    @app.post("/images/{image_id}/layers/{user_id}/close")
    def close_image(image_id: int, user_id: int, request: Request):
        authorize(request, user_id)
        store.close_image(user_id, image_id)
        return {"closed": True}

    @app.post("/images/{image_id}/auto-annotate", status_code=201)
    def auto_annotate(image_id: int, body: dict, request: Request):
        user_id = body.get("user_id")
        if not isinstance(user_id, int):
            raise SchemaError("auto-annotate needs user_id")
        authorize(request, user_id)
        created = toolbox.auto_annotate(image_id, user_id)
        return {"created": [annotation_to_obj(r) for r in created]}

    return app


def _check_skeleton(record: AnnotationRecord) -> None:
    problems = skeleton_violations(record)
    if problems:
        raise IntegrityError("; ".join(str(v) for v in problems))


class ServiceHandle:
    """A running API service; ``stop()`` shuts it down and flushes layers."""

    def __init__(self, server: uvicorn.Server, thread: threading.Thread,
                 sock: socket.socket, store: AnnotationStore):
        self._server = server
        self._thread = thread
        self._sock = sock
        self.store = store
        host, port = sock.getsockname()[:2]
        self.url = f"http://{host}:{port}"

    def stop(self) -> None:
        self._server.should_exit = True
        self._thread.join(timeout=10)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.stop()


def serve(config: ApiConfig, store: AnnotationStore | None = None,
          wait: bool = False) -> ServiceHandle:
    """Bind the listen address and run the API.

    Raises :class:`BindFailure` when the port is taken.  With ``wait`` the
    call blocks until shutdown (CLI mode); otherwise the server runs on a
    background thread and the returned handle stops it.
    """
    store = store or AnnotationStore(config.store)
    app = create_app(config, store=store)
    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        sock.bind((config.host, config.port))
        sock.listen(128)
    except OSError as exc:
        sock.close()
        raise BindFailure(f"cannot bind {config.listen}: {exc}") from exc

    server = uvicorn.Server(uvicorn.Config(app, log_level="warning", access_log=False))
    thread = threading.Thread(target=server.run, kwargs={"sockets": [sock]}, daemon=True)
    handle = ServiceHandle(server, thread, sock, store)
    thread.start()
    deadline = time.monotonic() + 10
    while not server.started and thread.is_alive() and time.monotonic() < deadline:
        time.sleep(0.01)
    if not server.started:
        raise BindFailure(f"server failed to start on {config.listen}")
    if wait:
        try:
            while thread.is_alive():
                thread.join(timeout=0.5)
        except KeyboardInterrupt:
            handle.stop()
    return handle
