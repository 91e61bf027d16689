"""Image and file I/O. All writes go to a temporary file in the target
directory and are renamed into place, so readers never observe partial
files.
"""

from __future__ import annotations

import os
import tempfile
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import IngestError
from .validation import check_binary_mask, check_label_map, check_rgb_image

# annotation rasters keep their native integer encoding; palette indices
# and 16-bit grays are object labels, not colors
_ANNOTATION_MODES = {"1", "L", "P", "I", "I;16"}


def load_rgb(path) -> np.ndarray:
    """Decode an image file as an (H, W, 3) uint8 RGB array."""
    path = Path(path)
    try:
        with Image.open(path) as im:
            return np.asarray(im.convert("RGB"), dtype=np.uint8)
    except (OSError, UnidentifiedImageError, ValueError) as exc:
        raise IngestError(f"cannot decode image {path}: {exc}") from exc


def load_annotation(path) -> np.ndarray:
    """Decode an annotation file as an int32 label map without any color
    conversion (palette/gray values are the labels)."""
    path = Path(path)
    try:
        with Image.open(path) as im:
            if im.mode not in _ANNOTATION_MODES:
                raise IngestError(
                    f"annotation {path} has mode {im.mode}; expected one of "
                    f"{sorted(_ANNOTATION_MODES)}"
                )
            arr = np.asarray(im)
    except (OSError, UnidentifiedImageError, ValueError) as exc:
        raise IngestError(f"cannot decode annotation {path}: {exc}") from exc
    if arr.ndim != 2:
        raise IngestError(f"annotation {path} is not a single-plane raster")
    return arr.astype(np.int32)


def _atomic_save(im: Image.Image, path: Path) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=path.suffix)
    os.close(fd)
    try:
        im.save(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str) -> None:
    """Write text via a temporary sibling file and an atomic rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=path.suffix)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_label_map(path, labels: np.ndarray) -> None:
    """Write a label map as a 16-bit grayscale PNG."""
    labels = check_label_map(labels)
    if labels.size and labels.max() > 65535:
        raise ValueError("label map has more than 65535 labels")
    path = Path(path)
    if path.suffix.lower() != ".png":
        raise ValueError(f"label maps are written as PNG, got {path.suffix!r}")
    _atomic_save(Image.fromarray(labels.astype(np.uint16)), path)


def save_mask(path, mask: np.ndarray) -> None:
    """Write a binary mask as an 8-bit PNG (foreground 255)."""
    mask = check_binary_mask(mask)
    _atomic_save(Image.fromarray(mask.astype(np.uint8) * 255), Path(path))


_PALETTE = np.array([
    (230, 60, 60), (60, 170, 230), (90, 200, 90), (235, 180, 50),
    (170, 90, 220), (240, 120, 180), (70, 210, 200), (150, 150, 70),
], dtype=np.float64)


def save_overlay(path, img: np.ndarray, regions: np.ndarray) -> None:
    """Write the image with segmented regions tinted per label."""
    img = check_rgb_image(img)
    regions = check_label_map(regions)
    if img.shape[:2] != regions.shape:
        raise ValueError("image and regions must share a shape")
    out = img.astype(np.float64)
    fg = regions > 0
    if fg.any():
        colors = _PALETTE[(regions[fg] - 1) % len(_PALETTE)]
        out[fg] = 0.55 * out[fg] + 0.45 * colors
    _atomic_save(Image.fromarray(np.clip(out + 0.5, 0, 255).astype(np.uint8)), Path(path))
