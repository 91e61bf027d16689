"""Synthetic tissue phantoms with procedurally known gland geometry.

Each phantom is an RGB image of pink stroma, white gland interiors, and
dark elliptical nuclei, plus a label map of the true gland disks. Two rim
styles mirror the two boundary regimes:

* thin: single-file rim nuclei about 14.5 px apart (linkable, but too far
  apart to count as close endpoint neighbors) over stroma with isolated
  nuclei, so the endpoint-neighbor ratio stays near zero;
* thick: a dense double-layer nuclear band with a few 2-4 px breaks over
  stroma with clustered nuclei, so skeleton endpoints have close foreign
  neighbors and the ratio is high.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

STROMA = (216, 172, 196)
LUMEN = (244, 240, 246)
NUCLEUS = (64, 44, 120)


@dataclass
class Phantom:
    image: np.ndarray
    annotation: np.ndarray
    rim_kind: str


def _add_ellipse(mask: np.ndarray, cx: float, cy: float, rx: float, ry: float) -> None:
    h, w = mask.shape
    x0, x1 = int(max(0, cx - rx - 1)), int(min(w, cx + rx + 2))
    y0, y1 = int(max(0, cy - ry - 1)), int(min(h, cy + ry + 2))
    if x0 >= x1 or y0 >= y1:
        return
    yy, xx = np.ogrid[y0:y1, x0:x1]
    inside = ((xx - cx) / rx) ** 2 + ((yy - cy) / ry) ** 2 <= 1.0
    mask[y0:y1, x0:x1] |= inside


def _add_nucleus(mask: np.ndarray, rng: np.random.Generator, cx: float, cy: float) -> None:
    _add_ellipse(mask, cx, cy, rng.uniform(2.0, 2.6), rng.uniform(2.0, 2.6))


def _place_glands(rng: np.random.Generator, size: int, n: int) -> list[tuple[float, float, float]]:
    glands: list[tuple[float, float, float]] = []
    for _ in range(800):
        if len(glands) == n:
            break
        r = rng.uniform(36.0, 44.0)
        margin = r + 13
        cx = rng.uniform(margin, size - margin)
        cy = rng.uniform(margin, size - margin)
        if all(np.hypot(cx - gx, cy - gy) >= r + gr + 26 for gx, gy, gr in glands):
            glands.append((cx, cy, r))
    if len(glands) < n:
        raise RuntimeError("could not place glands; adjust size or count")
    return glands


def _rim_thin(rng, nuclei, gx, gy, radius):
    ring_r = radius - 4.0
    count = int(round(2 * np.pi * ring_r / 14.5))
    theta0 = rng.uniform(0, 2 * np.pi)
    for i in range(count):
        theta = theta0 + 2 * np.pi * i / count
        jitter = rng.uniform(-0.5, 0.5, 2)
        _add_nucleus(nuclei, rng,
                     gx + ring_r * np.cos(theta) + jitter[0],
                     gy + ring_r * np.sin(theta) + jitter[1])


def _rim_thick(rng, nuclei, gx, gy, radius):
    # two radially aligned layers of overlapping nuclei; each break removes
    # one whole column, leaving a roughly 2 px through-gap that the
    # normal-direction walks can bridge under the window-mean stopping rule
    mid_r = radius - 4.5
    count = int(round(2 * np.pi * mid_r / 3.4))
    theta0 = rng.uniform(0, 2 * np.pi)
    first = int(rng.integers(0, count))
    second = (first + int(rng.integers(count // 3, count // 2))) % count
    for i in range(count):
        if i in (first, second):
            continue
        theta = theta0 + 2 * np.pi * i / count
        for layer_r in (radius - 6.0, radius - 3.0):
            _add_nucleus(nuclei, rng,
                         gx + layer_r * np.cos(theta),
                         gy + layer_r * np.sin(theta))


def _stroma_points(rng, size, glands, keepout, spacing, count):
    pts: list[tuple[float, float]] = []
    for _ in range(4000):
        if len(pts) == count:
            break
        x = rng.uniform(12, size - 12)
        y = rng.uniform(12, size - 12)
        if any(np.hypot(x - gx, y - gy) < gr + keepout for gx, gy, gr in glands):
            continue
        if any(np.hypot(x - px, y - py) < spacing for px, py in pts):
            continue
        pts.append((x, y))
    return pts


def make_phantom(seed: int, kind: str, size: int = 256, n_glands: int = 2) -> Phantom:
    if kind not in ("thin", "thick"):
        raise ValueError(f"unknown rim kind {kind!r}")
    rng = np.random.default_rng(seed)
    glands = _place_glands(rng, size, n_glands)

    lumen = np.zeros((size, size), dtype=bool)
    annotation = np.zeros((size, size), dtype=np.int32)
    for label, (gx, gy, r) in enumerate(glands, start=1):
        yy, xx = np.ogrid[:size, :size]
        disk = (xx - gx) ** 2 + (yy - gy) ** 2 <= r * r
        lumen |= disk
        annotation[disk] = label

    nuclei = np.zeros((size, size), dtype=bool)
    for gx, gy, r in glands:
        if kind == "thin":
            _rim_thin(rng, nuclei, gx, gy, r)
        else:
            _rim_thick(rng, nuclei, gx, gy, r)

    if kind == "thin":
        for x, y in _stroma_points(rng, size, glands, keepout=24, spacing=26,
                                   count=int(rng.integers(14, 20))):
            _add_nucleus(nuclei, rng, x, y)
    else:
        # triplets of small, guaranteed-separate nuclei whose endpoints sit
        # within counting range of each other
        for x, y in _stroma_points(rng, size, glands, keepout=16, spacing=34,
                                   count=int(rng.integers(10, 15))):
            base = rng.uniform(0, 2 * np.pi)
            for arm in range(3):
                angle = base + 2 * np.pi * arm / 3 + rng.uniform(-0.2, 0.2)
                dist = rng.uniform(4.4, 5.4)
                r_small = rng.uniform(2.0, 2.3)
                _add_ellipse(nuclei, x + dist * np.cos(angle),
                             y + dist * np.sin(angle), r_small, r_small)

    img = np.empty((size, size, 3), dtype=np.float64)
    img[:] = STROMA
    img += rng.normal(0, 5.0, img.shape)
    lum = np.asarray(LUMEN, float) + rng.normal(0, 3.0, img.shape)
    img[lumen] = lum[lumen]
    nuc = np.asarray(NUCLEUS, float) + rng.normal(0, 4.0, img.shape)
    img[nuclei] = nuc[nuclei]
    image = np.clip(img + 0.5, 0, 255).astype(np.uint8)
    return Phantom(image, annotation, kind)


def make_suite(base_seed: int = 1000, n_train: int = 6, n_test: int = 10
               ) -> tuple[list[Phantom], list[Phantom]]:
    """Balanced thin/thick train and test phantom lists."""
    kinds = ("thin", "thick")
    train = [make_phantom(base_seed + i, kinds[i % 2]) for i in range(n_train)]
    test = [make_phantom(base_seed + 100 + i, kinds[i % 2]) for i in range(n_test)]
    return train, test
