"""Clients for assisted-labeling services and the image downloader.

The model wire protocol is JSON over HTTP POST; see ``mockmodel`` for a
reference server.  Clients are stateless besides configuration, never
mutate the store (except the downloader's file writes), and surface
connection problems as :class:`EndpointUnreachable` so callers can retry.
"""

from __future__ import annotations

import hashlib
import itertools
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import requests

from .errors import (
    EndpointUnreachable,
    InvalidResponse,
    ModelError,
    ProviderUnavailable,
    QuotaExceeded,
    UnknownCategoryName,
)
from .geometry import Point, Polygon, Region, bounding_box, region_clip
from .pocoformat import ImageRecord
from .store import AnnotationStore


@dataclass(frozen=True)
class ExtremePoints:
    """The user's four clicks on an object's extreme boundary points."""

    left: Point
    right: Point
    top: Point
    bottom: Point

    def __post_init__(self):
        for p in (self.left, self.right, self.top, self.bottom):
            if not (math.isfinite(p[0]) and math.isfinite(p[1])):
                raise ValueError("extreme points must be finite")
        if self.left[0] > self.right[0]:
            raise ValueError("left point must not be right of the right point")
        if self.top[1] > self.bottom[1]:
            raise ValueError("top point must not be below the bottom point")

    def box(self) -> tuple[float, float, float, float]:
        """(x0, y0, x1, y1) spanned by the four points."""
        xs = [self.left[0], self.right[0], self.top[0], self.bottom[0]]
        ys = [self.left[1], self.right[1], self.top[1], self.bottom[1]]
        return min(xs), min(ys), max(xs), max(ys)


@dataclass(frozen=True)
class DextrRequest:
    image_id: int
    points: ExtremePoints
    padding: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.padding) or self.padding < 0:
            raise ValueError("padding must be finite and >= 0")


@dataclass(frozen=True)
class ModelDetection:
    category_name: str
    region: Region
    confidence: float

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence must be within [0, 1]")
        if self.region.is_empty:
            raise ValueError("detection region must be non-empty")


@dataclass(frozen=True)
class SearchSpec:
    keyword: str
    count: int
    provider: str = ""

    def __post_init__(self):
        if not self.keyword:
            raise ValueError("keyword must be non-empty")
        if self.count < 1:
            raise ValueError("count must be >= 1")


def _post_json(url: str, payload: dict, timeout: float) -> dict:
    try:
        response = requests.post(url, json=payload, timeout=timeout)
    except (requests.ConnectionError, requests.Timeout) as exc:
        raise EndpointUnreachable(f"cannot reach {url}: {exc}") from exc
    try:
        body = response.json()
    except ValueError as exc:
        raise InvalidResponse(f"{url} returned non-JSON body") from exc
    if response.status_code != 200 or (isinstance(body, dict) and "error" in body):
        detail = body.get("error") if isinstance(body, dict) else response.text
        raise ModelError(f"{url} reported failure: {detail}")
    if not isinstance(body, dict):
        raise InvalidResponse(f"{url} returned a non-object body")
    return body


def _region_from_polygons(polygons, where: str) -> Region:
    if not isinstance(polygons, list) or not polygons:
        raise InvalidResponse(f"{where}: missing polygons")
    shells = []
    for ring in polygons:
        if not isinstance(ring, list) or len(ring) < 6 or len(ring) % 2 != 0:
            raise InvalidResponse(f"{where}: polygon needs >= 3 vertices")
        pts = [(float(ring[i]), float(ring[i + 1])) for i in range(0, len(ring), 2)]
        deduped = [p for i, p in enumerate(pts) if i == 0 or p != pts[i - 1]]
        if len(deduped) > 1 and deduped[0] == deduped[-1]:
            deduped.pop()
        if len(deduped) < 3:
            raise InvalidResponse(f"{where}: polygon needs >= 3 distinct vertices")
        shells.append(Polygon(tuple(deduped)))
    return Region(tuple(shells))


class DextrClient:
    """Four-extreme-points interactive segmentation."""

    def __init__(self, url: str | None, timeout: float = 30.0, default_padding: float = 50.0):
        self.url = url
        self.timeout = timeout
        self.default_padding = default_padding

    def segment(self, request: DextrRequest, image: ImageRecord) -> Region:
        """Ask the endpoint for a polygon around the clicked object.

        The result is clipped to the image frame intersected with the
        extreme-point box grown by padding + 1 px, which guarantees the
        advertised containment bound.
        """
        if not self.url:
            raise EndpointUnreachable("no DEXTR endpoint configured")
        body = _post_json(
            f"{self.url.rstrip('/')}/dextr",
            {
                "image_id": request.image_id,
                "points": {
                    "left": list(request.points.left),
                    "right": list(request.points.right),
                    "top": list(request.points.top),
                    "bottom": list(request.points.bottom),
                },
                "padding": request.padding,
            },
            self.timeout,
        )
        region = _region_from_polygons(body.get("polygons"), "dextr response")
        region = region_clip(region, image.width, image.height)
        x0, y0, x1, y1 = request.points.box()
        grow = request.padding + 1.0
        region = _clip_to_box(region, x0 - grow, y0 - grow, x1 + grow, y1 + grow)
        if region.is_empty:
            raise InvalidResponse("dextr response lies outside the image frame")
        return region


def _clip_to_box(region: Region, x0, y0, x1, y1) -> Region:
    shifted = region.translated(-x0, -y0)
    clipped = region_clip(shifted, x1 - x0, y1 - y0)
    return clipped.translated(x0, y0)


class SegmenterClient:
    """Whole-image auto-annotation via an instance-segmentation model."""

    def __init__(self, url: str | None, timeout: float = 30.0,
                 confidence_threshold: float = 0.5):
        self.url = url
        self.timeout = timeout
        self.confidence_threshold = confidence_threshold

    def auto_annotate(self, image: ImageRecord,
                      known_categories: list[str]) -> list[ModelDetection]:
        """All detections at or above the confidence threshold.

        Detections naming categories outside ``known_categories`` raise
        :class:`UnknownCategoryName` listing the offenders rather than
        being dropped silently.
        """
        if not self.url:
            raise EndpointUnreachable("no segmenter endpoint configured")
        body = _post_json(
            f"{self.url.rstrip('/')}/segment",
            {"image_id": image.id},
            self.timeout,
        )
        raw = body.get("detections")
        if not isinstance(raw, list):
            raise InvalidResponse("segment response: missing detections list")
        detections: list[ModelDetection] = []
        unknown: set[str] = set()
        for i, det in enumerate(raw):
            if not isinstance(det, dict):
                raise InvalidResponse(f"detection {i}: not an object")
            confidence = det.get("confidence", 1.0)
            if not isinstance(confidence, (int, float)) or not 0 <= confidence <= 1:
                raise InvalidResponse(f"detection {i}: bad confidence {confidence!r}")
            if confidence < self.confidence_threshold:
                continue
            category = det.get("category")
            if not isinstance(category, str) or not category:
                raise InvalidResponse(f"detection {i}: missing category")
            region = _region_from_polygons(det.get("polygons"), f"detection {i}")
            region = region_clip(region, image.width, image.height)
            if region.is_empty:
                continue
            if category not in known_categories:
                unknown.add(category)
                continue
            detections.append(ModelDetection(
                category_name=category, region=region, confidence=float(confidence),
            ))
        if unknown:
            raise UnknownCategoryName(sorted(unknown))
        return detections


# ---------------------------------------------------------------------------
# image search providers


class LocalFixtureProvider:
    """Deterministic provider: serves files from a fixture directory.

    Files under ``<root>/<keyword>/`` are preferred; the root itself is the
    fallback pool.  Sorted order keeps runs reproducible.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)

    def fetch(self, keyword: str, count: int) -> Iterator[bytes]:
        pool = self.root / keyword
        if not pool.is_dir():
            pool = self.root
        if not pool.is_dir():
            raise ProviderUnavailable(f"fixture directory {self.root} does not exist")
        for path in sorted(pool.iterdir()):
            if path.is_file():
                yield path.read_bytes()


class HttpTemplateProvider:
    """Fetches ``template.format(keyword=..., index=...)`` until exhausted.

    A 404 ends the stream; 429 raises QuotaExceeded; connection failures
    raise ProviderUnavailable.
    """

    def __init__(self, template: str, timeout: float = 30.0):
        self.template = template
        self.timeout = timeout

    def fetch(self, keyword: str, count: int) -> Iterator[bytes]:
        index = 0
        while True:
            url = self.template.format(keyword=keyword, index=index)
            try:
                response = requests.get(url, timeout=self.timeout)
            except (requests.ConnectionError, requests.Timeout) as exc:
                raise ProviderUnavailable(f"cannot reach {url}: {exc}") from exc
            if response.status_code == 404:
                return
            if response.status_code == 429:
                raise QuotaExceeded(f"{url} rate-limited the request")
            if response.status_code != 200:
                raise ProviderUnavailable(f"{url} returned {response.status_code}")
            yield response.content
            index += 1


def make_provider(spec: str | None, timeout: float = 30.0):
    """Provider factory from a config string: 'stub:<dir>' or 'http:<template>'."""
    if not spec:
        raise ProviderUnavailable("no image search provider configured")
    kind, _, rest = spec.partition(":")
    if kind == "stub":
        return LocalFixtureProvider(rest)
    if kind == "http":
        return HttpTemplateProvider(rest, timeout=timeout)
    raise ProviderUnavailable(f"unknown provider kind {kind!r}")


_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"
_JPEG_MAGIC = b"\xff\xd8\xff"


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", text).strip("_") or "keyword"


def fetch_images(spec: SearchSpec, dataset_name: str, store: AnnotationStore,
                 provider=None) -> list[ImageRecord]:
    """Download keyword images into the dataset and register them.

    Files land in ``images/generated/<keyword>/`` named by content hash;
    byte-duplicates of anything already in the dataset are skipped.  Returns
    the newly registered records (best effort: fewer than requested when the
    provider runs dry).
    """
    dataset = store.dataset(dataset_name)
    if provider is None:
        provider = make_provider(spec.provider)
    images_dir = dataset.root_path / "images"
    existing = {
        hashlib.sha256(p.read_bytes()).hexdigest()
        for p in images_dir.rglob("*") if p.is_file()
    }
    dest = images_dir / "generated" / _slug(spec.keyword)
    dest.mkdir(parents=True, exist_ok=True)
    stream = itertools.islice(provider.fetch(spec.keyword, spec.count), spec.count)
    for blob in stream:
        digest = hashlib.sha256(blob).hexdigest()
        if digest in existing:
            continue
        if blob.startswith(_PNG_MAGIC):
            suffix = ".png"
        elif blob.startswith(_JPEG_MAGIC):
            suffix = ".jpg"
        else:
            continue  # not an image payload
        (dest / f"{digest[:16]}{suffix}").write_bytes(blob)
        existing.add(digest)
    return store.scan_images(dataset_name)
