"""CLI verbs behave exactly like the operations they wrap."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from pocolabel.cli import run
from pocolabel.config import StoreConfig
from pocolabel.geometry import rle_encode
from pocolabel.pocoformat import (
    merge_datasets,
    parse_dataset,
    read_dataset,
    serialize_dataset,
)
from pocolabel.store import AnnotationStore

from test_pocoformat import GOLDEN
from test_store import square_annotation, write_png


@pytest.fixture
def root(tmp_path):
    return tmp_path / "root"


def test_init_and_scan(root, capsys, tmp_path):
    assert run(["-C", str(root), "init", "greens",
                "--category", "tomato:fruit", "--category", "stem:plant_part"]) == 0
    images = root / "greens" / "images"
    write_png(images / "a.png")
    write_png(images / "sub/b.png")
    assert run(["-C", str(root), "scan", "greens"]) == 0
    out = capsys.readouterr().out
    assert "registered 2 new images" in out
    store = AnnotationStore(StoreConfig(root=root))
    assert len(store.images("greens")) == 2


def test_init_duplicate_exits_one(root, capsys):
    run(["-C", str(root), "init", "d", "--category", "a:t"])
    assert run(["-C", str(root), "init", "d", "--category", "a:t"]) == 1
    assert "error" in capsys.readouterr().err


def test_validate_golden_ok(capsys):
    assert run(["validate", str(GOLDEN)]) == 0
    assert capsys.readouterr().out == ""


def test_validate_dangling_ref(tmp_path, capsys):
    bad = json.loads(GOLDEN.read_text())
    bad["annotations"][0]["image_id"] = 777
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(bad))
    assert run(["validate", str(path)]) == 1
    out = capsys.readouterr().out.strip().splitlines()
    assert len(out) == 1
    assert "DanglingImageRef" in out[0]


def test_validate_json_format(tmp_path, capsys):
    bad = json.loads(GOLDEN.read_text())
    bad["annotations"][0]["area"] = 400.0
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(bad))
    assert run(["validate", str(path), "--format", "json"]) == 1
    payload = json.loads(capsys.readouterr().out)
    assert payload[0]["code"] == "AreaMismatch"


def test_merge_matches_module(tmp_path, capsys):
    out_path = tmp_path / "merged.json"
    assert run(["merge", str(GOLDEN), str(GOLDEN), "-o", str(out_path)]) == 0
    cli_doc = read_dataset(out_path)
    direct = merge_datasets([
        parse_dataset(GOLDEN.read_text()), parse_dataset(GOLDEN.read_text()),
    ])
    assert serialize_dataset(cli_doc) == serialize_dataset(direct)
    assert len(cli_doc.annotations) == 4


def test_strip_poco_cli(tmp_path):
    out_path = tmp_path / "plain.json"
    assert run(["strip-poco", str(GOLDEN), "-o", str(out_path)]) == 0
    assert '"poco"' not in out_path.read_text()


def test_export_and_stats(root, tmp_path, capsys):
    run(["-C", str(root), "init", "d", "--category", "tomato:fruit"])
    write_png(root / "d" / "images" / "a.png")
    run(["-C", str(root), "scan", "d"])
    store = AnnotationStore(StoreConfig(root=root))
    image = store.images("d")[0]
    store.open_layer(1, image.id)
    store.add_annotation(1, image.id, square_annotation())
    store.close_image(1, image.id)
    store.autosave_tick()

    out_path = tmp_path / "export.json"
    assert run(["-C", str(root), "export", "d", "--user", "admin",
                "-o", str(out_path)]) == 0
    doc = read_dataset(out_path)
    assert len(doc.annotations) == 1

    capsys.readouterr()
    assert run(["-C", str(root), "stats", "--user", "admin", "--format", "json"]) == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats["images_annotated"] == 1
    assert stats["mean_annotation_area"] == pytest.approx(4.0)


def test_generate_via_stub(root, tmp_path, capsys):
    run(["-C", str(root), "init", "d", "--category", "tomato:fruit"])
    pool = tmp_path / "pool"
    for i in range(3):
        write_png(pool / f"p{i}.png", color=(i, 50, 50))
    assert run(["-C", str(root), "generate", "d", "--keyword", "tomato",
                "--count", "2", "--provider", f"stub:{pool}"]) == 0
    assert "registered 2 new images" in capsys.readouterr().out


def test_rle_round_trip_through_cli(tmp_path, capsys, rng):
    mask = rng.random((6, 9)) < 0.5
    img_path = tmp_path / "mask.png"
    Image.fromarray((mask * np.uint8(255))).convert("RGB").save(img_path)
    assert run(["rle", "encode", str(img_path)]) == 0
    encoded = json.loads(capsys.readouterr().out)
    assert encoded == rle_encode(mask).to_coco()

    rle_path = tmp_path / "mask.json"
    rle_path.write_text(json.dumps(encoded))
    out_png = tmp_path / "back.png"
    assert run(["rle", "decode", str(rle_path), "-o", str(out_png)]) == 0
    back = np.asarray(Image.open(out_png).convert("L")) > 127
    assert np.array_equal(back, mask)


def test_rle_decode_ascii(tmp_path, capsys):
    rle_path = tmp_path / "r.json"
    rle_path.write_text(json.dumps({"counts": [0, 2, 2], "size": [2, 2]}))
    assert run(["rle", "decode", str(rle_path)]) == 0
    assert capsys.readouterr().out == "#.\n#.\n"


def test_usage_error_exit_code_two():
    with pytest.raises(SystemExit) as exc:
        run(["definitely-not-a-verb"])
    assert exc.value.code == 2
