"""PNG/JPEG ingestion."""

from __future__ import annotations

import numpy as np
from PIL import Image

from pocolabel.geometry import image_size, load_rgb


def test_png_round_trip(tmp_path):
    pixels = np.arange(4 * 6 * 3, dtype=np.uint8).reshape(4, 6, 3)
    path = tmp_path / "img.png"
    Image.fromarray(pixels).save(path)
    loaded = load_rgb(path)
    assert loaded.shape == (4, 6, 3)
    assert np.array_equal(loaded, pixels)


def test_alpha_channel_discarded(tmp_path):
    rgba = np.zeros((3, 3, 4), dtype=np.uint8)
    rgba[..., 0] = 200
    rgba[..., 3] = 10  # nearly transparent, must not change RGB
    path = tmp_path / "img.png"
    Image.fromarray(rgba, mode="RGBA").save(path)
    loaded = load_rgb(path)
    assert loaded.shape == (3, 3, 3)
    assert (loaded[..., 0] == 200).all()


def test_jpeg_loads_as_rgb(tmp_path):
    pixels = np.full((5, 7, 3), (90, 140, 30), dtype=np.uint8)
    path = tmp_path / "img.jpg"
    Image.fromarray(pixels).save(path, quality=95)
    loaded = load_rgb(path)
    assert loaded.shape == (5, 7, 3)
    assert abs(int(loaded[2, 3, 1]) - 140) < 12  # lossy but close


def test_grayscale_promoted_to_rgb(tmp_path):
    gray = np.full((4, 4), 77, dtype=np.uint8)
    path = tmp_path / "img.png"
    Image.fromarray(gray, mode="L").save(path)
    loaded = load_rgb(path)
    assert loaded.shape == (4, 4, 3)
    assert (loaded == 77).all()


def test_image_size_reads_header(tmp_path):
    path = tmp_path / "img.png"
    Image.new("RGB", (123, 45)).save(path)
    assert image_size(path) == (123, 45)
