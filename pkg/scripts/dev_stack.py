#!/usr/bin/env python3
"""Run a full development stack: mock model server + API + seeded dataset.

Used by frontend tests and for hacking on the UI against live endpoints.
Prints one JSON line with the stack's URLs and seeded ids, then serves until
killed.  Images come from the mock server's deterministic PNG generator via
the HTTP search provider, so no fixture files are needed.
"""

from __future__ import annotations

import argparse
import json
import signal
import sys
import tempfile
import threading
from pathlib import Path

from pocolabel.clients import SearchSpec, fetch_images
from pocolabel.config import ApiConfig, ClientConfig, StoreConfig
from pocolabel.mockmodel import MockModelServer
from pocolabel.pocoformat import CategoryRecord
from pocolabel.service import serve
from pocolabel.store import AnnotationStore


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--root", help="store root (default: a fresh temp dir)")
    parser.add_argument("--listen", default="127.0.0.1:0")
    parser.add_argument("--images", type=int, default=3)
    args = parser.parse_args()

    root = Path(args.root) if args.root else Path(tempfile.mkdtemp(prefix="poco-stack-"))
    mock = MockModelServer(search_image_count=max(args.images, 3)).start()

    config = ApiConfig(
        store=StoreConfig(root=root, autosave_period=2.0),
        clients=ClientConfig(
            dextr_url=mock.url,
            segmenter_url=mock.url,
            search_provider=f"http:{mock.url}/images/{{keyword}}/{{index}}.png",
        ),
        listen=args.listen,
    )
    store = AnnotationStore(config.store)
    if "demo" not in [d.name for d in store.datasets()]:
        store.create_dataset("demo", [
            CategoryRecord(id=1, name="tomato", poco={"type": "fruit"}),
            CategoryRecord(id=2, name="stem", poco={"type": "plant_part"}),
        ])
    fetch_images(
        SearchSpec(keyword="tomato", count=args.images,
                   provider=config.clients.search_provider),
        "demo", store,
    )

    # a two-tone fixture so flood stops at a color boundary
    split_path = store.dataset("demo").root_path / "images" / "fixtures" / "split.png"
    if not split_path.exists():
        import numpy as np
        from PIL import Image

        split = np.zeros((20, 32, 3), dtype=np.uint8)
        split[:, 16:] = (220, 220, 200)
        split_path.parent.mkdir(parents=True, exist_ok=True)
        Image.fromarray(split).save(split_path)
        store.scan_images("demo")
    split_id = next(
        rec.id for rec in store.images("demo") if rec.file_name.endswith("split.png")
    )
    image_ids = [rec.id for rec in store.images("demo")]

    # canned auto-annotate detections for every seeded image
    for image_id in image_ids:
        mock.detections[image_id] = [
            {"category": "tomato", "polygons": [[2, 2, 9, 2, 9, 9, 2, 9]],
             "confidence": 0.9},
            {"category": "stem", "polygons": [[12, 4, 20, 4, 20, 12, 12, 12]],
             "confidence": 0.8},
        ]

    handle = serve(config, store=store)
    print(json.dumps({
        "api": handle.url,
        "mock": mock.url,
        "dataset": "demo",
        "images": image_ids,
        "split_image": split_id,
        "root": str(root),
    }), flush=True)

    stop = threading.Event()
    signal.signal(signal.SIGTERM, lambda *_: stop.set())
    signal.signal(signal.SIGINT, lambda *_: stop.set())
    stop.wait()
    handle.stop()
    mock.stop()
    sys.exit(0)


if __name__ == "__main__":
    main()
