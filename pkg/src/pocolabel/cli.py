"""Command-line front door: dataset lifecycle, validation, export, serving.

Every verb is a thin wrapper over a store/format operation.  Exit codes:
0 success, 1 operation failure or validation findings, 2 usage errors
(argparse's convention).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .clients import SearchSpec, fetch_images
from .config import ApiConfig, StoreConfig, load_config
from .errors import PocoError
from .geometry import Rle, load_rgb, rle_decode, rle_encode
from .pocoformat import (
    CategoryRecord,
    merge_datasets,
    parse_dataset,
    read_dataset,
    serialize_dataset,
    strip_poco,
    validate_dataset,
    write_dataset,
)
from .store import AnnotationStore


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="poco",
        description="Instance-segmentation dataset and annotation tooling.",
    )
    parser.add_argument("--config", help="JSON config file (or POCO_CONFIG)")
    parser.add_argument("-C", "--root", help="store root directory (or POCO_ROOT)")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("init", help="create a dataset")
    p.add_argument("name")
    p.add_argument("--category", action="append", default=[], metavar="NAME:TYPE",
                   help="category as name:type, repeatable")
    p.add_argument("--metadata", action="append", default=[], metavar="KEY:KIND",
                   help="metadata schema entry as key:kind, repeatable")

    p = sub.add_parser("scan", help="register new images in a dataset")
    p.add_argument("name")

    p = sub.add_parser("validate", help="check a dataset file")
    p.add_argument("file")
    p.add_argument("--format", choices=("text", "json"), default="text")

    p = sub.add_parser("export", help="export a user's annotations")
    p.add_argument("name")
    p.add_argument("--user", required=True, help="user id or username")
    p.add_argument("--categories", help="comma-separated category names")
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("merge", help="merge dataset files")
    p.add_argument("files", nargs="+")
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("strip-poco", help="drop extension blocks, pure COCO out")
    p.add_argument("file")
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("stats", help="per-user annotation statistics")
    p.add_argument("--user", required=True, help="user id or username")
    p.add_argument("--format", choices=("text", "json"), default="text")

    p = sub.add_parser("generate", help="download keyword images into a dataset")
    p.add_argument("name")
    p.add_argument("--keyword", required=True)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--provider", help="stub:<dir> or http:<url-template>")

    p = sub.add_parser("serve", help="run the HTTP API")
    p.add_argument("--listen", help="host:port (or POCO_LISTEN)")

    p = sub.add_parser("rle", help="debug run-length masks")
    rle_sub = p.add_subparsers(dest="rle_verb", required=True)
    enc = rle_sub.add_parser("encode", help="PNG/JPEG mask file -> RLE JSON on stdout")
    enc.add_argument("image")
    dec = rle_sub.add_parser("decode", help="RLE JSON file -> mask")
    dec.add_argument("file")
    dec.add_argument("-o", "--output", help="write a PNG instead of ASCII art")

    return parser


def _config(args) -> ApiConfig:
    config = load_config(args.config)
    if args.root:
        config.store = StoreConfig(
            root=Path(args.root),
            autosave_period=config.store.autosave_period,
            undo_capacity=config.store.undo_capacity,
        )
    if getattr(args, "listen", None):
        config.listen = args.listen
    return config


def _store(args) -> AnnotationStore:
    return AnnotationStore(_config(args).store)


def _split_pairs(raw: list[str], what: str) -> list[tuple[str, str]]:
    out = []
    for item in raw:
        key, sep, value = item.partition(":")
        if not sep or not key or not value:
            raise PocoError(f"{what} must look like key:value, got {item!r}")
        out.append((key, value))
    return out


def _cmd_init(args) -> int:
    pairs = _split_pairs(args.category, "--category")
    categories = [
        CategoryRecord(id=i, name=name, poco={"type": kind})
        for i, (name, kind) in enumerate(pairs, start=1)
    ]
    store = _store(args)
    ds = store.create_dataset(args.name, categories,
                              metadata_schema=_split_pairs(args.metadata, "--metadata"))
    print(f"created dataset '{ds.name}' at {ds.root_path}")
    return 0


def _cmd_scan(args) -> int:
    added = _store(args).scan_images(args.name)
    print(f"registered {len(added)} new images")
    return 0


def _cmd_validate(args) -> int:
    try:
        doc = parse_dataset(Path(args.file).read_text(encoding="utf-8"), check=False)
    except PocoError as exc:
        if args.format == "json":
            print(json.dumps([{"code": exc.code, "message": str(exc)}]))
        else:
            print(f"{exc.code}: {exc}")
        return 1
    violations = validate_dataset(doc)
    if args.format == "json":
        print(json.dumps([{"code": v.code, "message": v.message} for v in violations]))
    else:
        for v in violations:
            print(v)
    return 0 if not violations else 1


def _cmd_export(args) -> int:
    store = _store(args)
    user = store.find_user(args.user)
    categories = [c for c in args.categories.split(",") if c] if args.categories else None
    doc = store.export_dataset(args.name, user.id, category_filter=categories)
    write_dataset(doc, args.output)
    print(f"wrote {len(doc.annotations)} annotations to {args.output}")
    return 0


def _cmd_merge(args) -> int:
    docs = [read_dataset(path) for path in args.files]
    merged = merge_datasets(docs)
    write_dataset(merged, args.output)
    print(f"merged {len(args.files)} files: {len(merged.annotations)} annotations, "
          f"{len(merged.categories)} categories")
    return 0


def _cmd_strip_poco(args) -> int:
    write_dataset(strip_poco(read_dataset(args.file)), args.output)
    print(f"wrote {args.output}")
    return 0


def _cmd_stats(args) -> int:
    store = _store(args)
    user = store.find_user(args.user)
    stats = store.compute_stats(user.id)
    if args.format == "json":
        print(json.dumps({
            "images_annotated": stats.images_annotated,
            "mean_annotation_area": stats.mean_annotation_area,
            "mean_seconds_per_annotation": stats.mean_seconds_per_annotation,
            "mean_seconds_per_image": stats.mean_seconds_per_image,
        }))
    else:
        print(f"user: {user.username} (id {user.id})")
        print(f"images annotated:            {stats.images_annotated}")
        print(f"mean annotation area (px^2): {stats.mean_annotation_area:.2f}")
        print(f"mean seconds per annotation: {stats.mean_seconds_per_annotation:.2f}")
        print(f"mean seconds per image:      {stats.mean_seconds_per_image:.2f}")
    return 0


def _cmd_generate(args) -> int:
    config = _config(args)
    store = AnnotationStore(config.store)
    spec = SearchSpec(
        keyword=args.keyword, count=args.count,
        provider=args.provider or config.clients.search_provider or "",
    )
    added = fetch_images(spec, args.name, store)
    print(f"downloaded and registered {len(added)} new images")
    return 0


def _cmd_serve(args) -> int:
    from .service import serve

    config = _config(args)
    print(f"serving on http://{config.listen} (store root {config.store.root})")
    serve(config, wait=True)
    return 0


def _cmd_rle(args) -> int:
    if args.rle_verb == "encode":
        pixels = load_rgb(args.image)
        mask = pixels.max(axis=2) > 127
        print(json.dumps(rle_encode(mask).to_coco()))
        return 0
    obj = json.loads(Path(args.file).read_text(encoding="utf-8"))
    mask = rle_decode(Rle.from_coco(obj))
    if args.output:
        from PIL import Image

        Image.fromarray((mask * np.uint8(255))).convert("L").save(args.output)
        print(f"wrote {args.output}")
    else:
        for row in mask:
            print("".join("#" if v else "." for v in row))
    return 0


_COMMANDS = {
    "init": _cmd_init,
    "scan": _cmd_scan,
    "validate": _cmd_validate,
    "export": _cmd_export,
    "merge": _cmd_merge,
    "strip-poco": _cmd_strip_poco,
    "stats": _cmd_stats,
    "generate": _cmd_generate,
    "serve": _cmd_serve,
    "rle": _cmd_rle,
}


def run(argv: list[str]) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.verb](args)
    except PocoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
