"""Image ingestion: PNG/JPEG files to RGB pixel arrays."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

SUPPORTED_SUFFIXES = {".png", ".jpg", ".jpeg"}


def load_rgb(path: str | Path) -> np.ndarray:
    """Load a PNG or JPEG as an (H, W, 3) uint8 array; alpha is discarded."""
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"), dtype=np.uint8)


def image_size(path: str | Path) -> tuple[int, int]:
    """(width, height) read from the file header without decoding pixels."""
    with Image.open(path) as img:
        return img.size
