"""Pixel-level primitives: grayscale conversion, connected components,
skeletons, small-neighborhood filters, and line drawing.

Conventions used throughout: foreground connectivity is 8-connected,
background connectivity is 4-connected (the standard dual pair, so a closed
8-connected curve separates inside from outside). Label maps number
components 1..n in raster-scan order of first encounter.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage
from skimage.morphology import thin as _guo_hall_thin

from .validation import check_binary_mask, check_label_map, check_rgb_image

_EIGHT = np.ones((3, 3), dtype=bool)
_FOUR = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
_NEIGHBOR_KERNEL = np.array([[1, 1, 1], [1, 0, 1], [1, 1, 1]], dtype=np.uint8)
_SOBEL_X = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float64)
_SOBEL_Y = np.array([[-1, -2, -1], [0, 0, 0], [1, 2, 1]], dtype=np.float64)


def to_grayscale(img: np.ndarray) -> np.ndarray:
    """Luma conversion, 0.299 R + 0.587 G + 0.114 B, rounded half up.

    Computed in exact integer arithmetic so results are platform-stable.
    """
    img = check_rgb_image(img)
    chans = img.astype(np.int64)
    luma = 299 * chans[..., 0] + 587 * chans[..., 1] + 114 * chans[..., 2]
    return ((luma + 500) // 1000).astype(np.uint8)


def label_components(mask: np.ndarray) -> tuple[np.ndarray, int]:
    """8-connected components of a binary mask.

    Returns (labels, count) with labels int32, background 0, and components
    numbered by raster-scan order of their first pixel.
    """
    mask = check_binary_mask(mask)
    raw, n = ndimage.label(mask, structure=_EIGHT)
    if n == 0:
        return raw.astype(np.int32), 0
    flat = raw.ravel()
    values, first = np.unique(flat, return_index=True)
    if values[0] == 0:
        values, first = values[1:], first[1:]
    # renumber so label order follows first raster-scan appearance
    remap = np.zeros(n + 1, dtype=np.int32)
    remap[values[np.argsort(first)]] = np.arange(1, n + 1, dtype=np.int32)
    return remap[raw], n


def centroids(labels: np.ndarray) -> list[tuple[int, float, float]]:
    """Per-component centroids as (label, cx, cy), in label order.

    Coordinates are pixel-center means; x is the column axis.
    """
    labels = check_label_map(labels)
    n = int(labels.max()) if labels.size else 0
    if n == 0:
        return []
    ys, xs = np.nonzero(labels)
    values = labels[ys, xs]
    counts = np.bincount(values, minlength=n + 1)[1:]
    if np.any(counts == 0):
        raise ValueError("label map has gaps in its label range")
    sx = np.bincount(values, weights=xs, minlength=n + 1)[1:]
    sy = np.bincount(values, weights=ys, minlength=n + 1)[1:]
    return [(k + 1, sx[k] / counts[k], sy[k] / counts[k]) for k in range(n)]


def thin(mask: np.ndarray) -> np.ndarray:
    """Morphological thinning to convergence (two-subiteration scheme).

    The result is a subset of the input with the same number of 8-connected
    components.
    """
    mask = check_binary_mask(mask)
    return _guo_hall_thin(mask)


def endpoints(mask: np.ndarray) -> np.ndarray:
    """Skeleton endpoints: foreground pixels with at most one foreground
    8-neighbor (isolated pixels count).

    Returns an (n, 2) int array of (x, y) coordinates in raster order.
    """
    mask = check_binary_mask(mask)
    nbrs = ndimage.correlate(
        mask.astype(np.uint8), _NEIGHBOR_KERNEL, mode="constant", cval=0
    )
    ys, xs = np.nonzero(mask & (nbrs <= 1))
    return np.column_stack([xs, ys]).astype(np.int64)


def majority_filter(mask: np.ndarray) -> np.ndarray:
    """3x3 majority vote: a pixel is set iff >= 5 of the 9 pixels in its
    neighborhood are set. Edge neighborhoods replicate the border pixel.
    """
    mask = check_binary_mask(mask)
    votes = ndimage.correlate(mask.astype(np.uint8), _EIGHT.astype(np.uint8), mode="nearest")
    return votes >= 5


def fill_holes(mask: np.ndarray) -> np.ndarray:
    """Fill background regions not 4-connected to the image border."""
    mask = check_binary_mask(mask)
    bg, n = ndimage.label(~mask, structure=_FOUR)
    if n == 0:
        return mask.copy()
    touches_border = np.zeros(n + 1, dtype=bool)
    for edge in (bg[0], bg[-1], bg[:, 0], bg[:, -1]):
        touches_border[np.unique(edge)] = True
    touches_border[0] = True
    return mask | ~touches_border[bg]


def area_filter(mask: np.ndarray, min_area: int) -> np.ndarray:
    """Drop 8-connected components smaller than min_area pixels."""
    mask = check_binary_mask(mask)
    if min_area < 0:
        raise ValueError(f"min_area must be >= 0, got {min_area}")
    if min_area <= 1:
        return mask.copy()
    labels, n = label_components(mask)
    if n == 0:
        return mask.copy()
    sizes = np.bincount(labels.ravel(), minlength=n + 1)
    keep = sizes >= min_area
    keep[0] = False
    return keep[labels]


def sobel(mask: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sobel gradient of a binary raster (treated as 0/1 intensities).

    Returns (magnitude, direction); direction is atan2(gy, gx) in [-pi, pi]
    with y pointing down rows, and is 0 where the magnitude vanishes.
    Border neighborhoods replicate edge pixels.
    """
    mask = check_binary_mask(mask)
    field = mask.astype(np.float64)
    gx = ndimage.correlate(field, _SOBEL_X, mode="nearest")
    gy = ndimage.correlate(field, _SOBEL_Y, mode="nearest")
    magnitude = np.hypot(gx, gy)
    direction = np.where(magnitude > 0, np.arctan2(gy, gx), 0.0)
    return magnitude, direction


def _line_pixels(x0: int, y0: int, x1: int, y1: int) -> tuple[np.ndarray, np.ndarray]:
    # endpoint order is canonicalized so (a, b) and (b, a) rasterize the
    # same set; the minor coordinate is the nearest integer to the ideal
    # line (ties toward +inf), computed exactly in integers
    if (x1, y1) < (x0, y0):
        x0, y0, x1, y1 = x1, y1, x0, y0
    dx = x1 - x0
    dy = y1 - y0
    if dx >= abs(dy):
        steps = np.arange(dx + 1, dtype=np.int64)
        if dx == 0:
            return np.array([x0], dtype=np.int64), np.array([y0], dtype=np.int64)
        ys = y0 + (2 * steps * dy + dx) // (2 * dx)
        return x0 + steps, ys
    n = abs(dy)
    sign = 1 if dy > 0 else -1
    steps = np.arange(n + 1, dtype=np.int64)
    xs = x0 + (2 * steps * dx + n) // (2 * n)
    return xs, y0 + sign * steps


def draw_line(mask: np.ndarray, p1: tuple[int, int], p2: tuple[int, int]) -> np.ndarray:
    """Rasterize the segment between two (x, y) pixels onto a copy of mask.

    The pixel set is symmetric in its endpoints, 8-connected, and one pixel
    per major-axis coordinate. Endpoints must lie inside the mask.
    """
    mask = check_binary_mask(mask)
    h, w = mask.shape
    for x, y in (p1, p2):
        if not (0 <= x < w and 0 <= y < h):
            raise ValueError(f"line endpoint ({x}, {y}) outside {w}x{h} image")
    xs, ys = _line_pixels(int(p1[0]), int(p1[1]), int(p2[0]), int(p2[1]))
    out = mask.copy()
    out[ys, xs] = True
    return out
