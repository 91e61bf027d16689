"""Input validation helpers shared by public entry points.

All image-like data is carried in plain numpy arrays:

* RGB image: shape (H, W, 3), dtype uint8
* grayscale image: shape (H, W), dtype uint8
* binary mask: shape (H, W), dtype bool
* label map: shape (H, W), integer dtype, background 0, labels 1..count
"""

from __future__ import annotations

import numpy as np


def check_rgb_image(img) -> np.ndarray:
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected an (H, W, 3) RGB image, got shape {img.shape}")
    if img.dtype != np.uint8:
        raise ValueError(f"expected uint8 RGB image, got dtype {img.dtype}")
    return img


def check_gray_image(img) -> np.ndarray:
    img = np.asarray(img)
    if img.ndim != 2:
        raise ValueError(f"expected an (H, W) grayscale image, got shape {img.shape}")
    if img.dtype != np.uint8:
        raise ValueError(f"expected uint8 grayscale image, got dtype {img.dtype}")
    return img


def check_binary_mask(mask) -> np.ndarray:
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise ValueError(f"expected an (H, W) binary mask, got shape {mask.shape}")
    if mask.dtype != np.bool_:
        raise ValueError(f"expected bool mask, got dtype {mask.dtype}")
    return mask


def check_label_map(labels) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.ndim != 2:
        raise ValueError(f"expected an (H, W) label map, got shape {labels.shape}")
    if not np.issubdtype(labels.dtype, np.integer):
        raise ValueError(f"expected integer label map, got dtype {labels.dtype}")
    if labels.size and labels.min() < 0:
        raise ValueError("label maps must be non-negative (background 0)")
    return labels


def check_same_shape(a: np.ndarray, b: np.ndarray, what: str = "inputs") -> None:
    if a.shape[:2] != b.shape[:2]:
        raise ValueError(f"{what} must share a shape, got {a.shape[:2]} and {b.shape[:2]}")
