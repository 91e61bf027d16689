"""Per-nucleus appearance features: channel histograms and Haralick
texture descriptors over a square window around each component centroid.

The feature vector layout is fixed at 135 values:
[R hist(32), G hist(32), B hist(32), R haralick(13), G haralick(13),
B haralick(13)].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .preprocess import epithelial_mask
from .raster import centroids, label_components
from .validation import check_label_map, check_rgb_image, check_same_shape

FEATURE_DIM = 135
_HIST_BINS = 32
_GLCM_LEVELS = 32
# distance-1 offsets for 0, 45, 90 and 135 degrees as (dy, dx)
_GLCM_OFFSETS = ((0, 1), (-1, 1), (-1, 0), (-1, -1))


@dataclass(frozen=True)
class Window:
    """A z-by-z uint8 crop centered on a pixel, border-replicated."""

    patch: np.ndarray
    center: tuple[int, int]
    z: int


@dataclass(frozen=True)
class Glcm:
    """Gray-level co-occurrence matrix, symmetric over the given offsets."""

    matrix: np.ndarray
    normalized: bool


def extract_window(img: np.ndarray, center: tuple[float, float], z: int) -> Window:
    """Crop a z x z window around (cx, cy), replicating edge pixels where
    the window leaves the image. The center rounds half up and clamps to
    the image bounds.
    """
    img = check_rgb_image(img)
    if z < 16:
        raise ValueError(f"window size must be >= 16, got {z}")
    h, w = img.shape[:2]
    cx = min(max(int(np.floor(center[0] + 0.5)), 0), w - 1)
    cy = min(max(int(np.floor(center[1] + 0.5)), 0), h - 1)
    half = z // 2
    rows = np.clip(np.arange(cy - half, cy - half + z), 0, h - 1)
    cols = np.clip(np.arange(cx - half, cx - half + z), 0, w - 1)
    return Window(img[np.ix_(rows, cols)], (cx, cy), z)


def channel_histogram(plane: np.ndarray, bins: int = _HIST_BINS) -> np.ndarray:
    """Raw intensity counts over equal-width bins of [0, 255]."""
    if 256 % bins != 0:
        raise ValueError(f"bins must divide 256, got {bins}")
    width = 256 // bins
    counts = np.bincount(plane.ravel() // width, minlength=bins)
    return counts.astype(np.float64)


def glcm(plane: np.ndarray, levels: int = _GLCM_LEVELS, normalize: bool = True) -> Glcm:
    """Distance-1 co-occurrence matrix over four directions, symmetric.

    Intensities quantize to `levels` equal-width bins. Each ordered pixel
    pair contributes to (a, b) and (b, a); counts from the four offsets are
    summed before normalization.
    """
    if plane.ndim != 2 or plane.dtype != np.uint8:
        raise ValueError("glcm expects a uint8 plane")
    if not 2 <= levels <= 256:
        raise ValueError(f"levels must be in [2, 256], got {levels}")
    q = (plane.astype(np.int64) * levels) >> 8
    mat = np.zeros((levels, levels), dtype=np.float64)
    h, w = q.shape
    for dy, dx in _GLCM_OFFSETS:
        y0, y1 = max(0, -dy), min(h, h - dy)
        x0, x1 = max(0, -dx), min(w, w - dx)
        if y0 >= y1 or x0 >= x1:
            continue
        a = q[y0:y1, x0:x1].ravel()
        b = q[y0 + dy : y1 + dy, x0 + dx : x1 + dx].ravel()
        pair = np.bincount(a * levels + b, minlength=levels * levels)
        pair = pair.reshape(levels, levels).astype(np.float64)
        mat += pair + pair.T
    total = mat.sum()
    if normalize:
        if total == 0:
            raise ValueError("cannot normalize an empty co-occurrence matrix")
        mat /= total
    return Glcm(mat, normalized=normalize)


def _entropy(p: np.ndarray) -> float:
    # natural log with the 0 * log 0 := 0 convention, exact at p == 0
    nz = p[p > 0]
    return float(-(nz * np.log(nz)).sum())


def haralick13(g: Glcm) -> np.ndarray:
    """The 13 classic co-occurrence texture descriptors, in their original
    order: energy, contrast, correlation, variance, inverse difference
    moment, sum average, sum variance, sum entropy, entropy, difference
    variance, difference entropy, and the two information measures of
    correlation. Natural logarithms throughout; zero-variance marginals
    make correlation 0 by convention. Sum/difference marginals are indexed
    by 0-based level sums (k = i + j) and absolute differences; the sum
    variance is taken around the sum average. The variance descriptor is
    the row-marginal variance (equal to the column one for symmetric
    input).
    """
    if not g.normalized:
        raise ValueError("haralick13 requires a normalized co-occurrence matrix")
    p = g.matrix
    levels = p.shape[0]
    if abs(p.sum() - 1.0) > 1e-9:
        raise ValueError("co-occurrence matrix does not sum to 1")
    idx = np.arange(levels, dtype=np.float64)
    px = p.sum(axis=1)
    py = p.sum(axis=0)
    i = idx[:, None]
    j = idx[None, :]
    p_plus = np.bincount((i + j).astype(np.int64).ravel(), weights=p.ravel(),
                         minlength=2 * levels - 1)
    p_minus = np.bincount(np.abs(i - j).astype(np.int64).ravel(), weights=p.ravel(),
                          minlength=levels)
    k_plus = np.arange(2 * levels - 1, dtype=np.float64)
    k_minus = idx

    mu_x = float((idx * px).sum())
    mu_y = float((idx * py).sum())
    var_x = float(((idx - mu_x) ** 2 * px).sum())
    var_y = float(((idx - mu_y) ** 2 * py).sum())

    f1 = float((p * p).sum())
    f2 = float((k_minus**2 * p_minus).sum())
    if var_x > 0 and var_y > 0:
        f3 = (float((i * j * p).sum()) - mu_x * mu_y) / np.sqrt(var_x * var_y)
    else:
        f3 = 0.0
    f4 = var_x
    f5 = float((p / (1.0 + (i - j) ** 2)).sum())
    f6 = float((k_plus * p_plus).sum())
    f7 = float(((k_plus - f6) ** 2 * p_plus).sum())
    f8 = _entropy(p_plus)
    f9 = _entropy(p.ravel())
    mean_minus = float((k_minus * p_minus).sum())
    f10 = float(((k_minus - mean_minus) ** 2 * p_minus).sum())
    f11 = _entropy(p_minus)

    hx = _entropy(px)
    hy = _entropy(py)
    outer = px[:, None] * py[None, :]
    nz = p > 0
    hxy1 = float(-(p[nz] * np.log(outer[nz])).sum())
    hxy2 = _entropy(outer.ravel())
    denom = max(hx, hy)
    f12 = (f9 - hxy1) / denom if denom > 0 else 0.0
    f13 = float(np.sqrt(max(0.0, 1.0 - np.exp(-2.0 * (hxy2 - f9)))))

    return np.array([f1, f2, f3, f4, f5, f6, f7, f8, f9, f10, f11, f12, f13])


def feature_vector(window: Window) -> np.ndarray:
    """135-value descriptor of a window: per-channel 32-bin histograms,
    then per-channel 13 Haralick features, channel order R, G, B.
    """
    patch = window.patch
    if patch.ndim != 3 or patch.shape[2] != 3 or patch.dtype != np.uint8:
        raise ValueError("feature_vector expects an RGB window")
    hists = [channel_histogram(patch[..., c]) for c in range(3)]
    textures = [haralick13(glcm(patch[..., c])) for c in range(3)]
    return np.concatenate(hists + textures)


def component_features(img: np.ndarray, labels: np.ndarray, z: int = 24
                       ) -> tuple[np.ndarray, list[tuple[int, float, float]]]:
    """Feature matrix for every labeled component, one row per label in
    label order, plus the component centroids the windows were taken at.
    """
    img = check_rgb_image(img)
    labels = check_label_map(labels)
    check_same_shape(img, labels, "image and label map")
    cents = centroids(labels)
    if not cents:
        return np.zeros((0, FEATURE_DIM)), []
    rows = [feature_vector(extract_window(img, (cx, cy), z)) for _, cx, cy in cents]
    return np.stack(rows), cents


def build_training_set(images, annotations, z: int = 24, return_masks: bool = False):
    """Assemble (X, y) over candidate nuclei of all images.

    Candidates are the components of the darkest Otsu segment; a candidate
    is positive iff its rounded centroid lands on a nonzero annotation
    pixel. X is (n, 135) float64, y is (n,) int8 in {0, 1}. With
    return_masks, the per-image candidate masks come back as a third item.
    """
    xs: list[np.ndarray] = []
    ys: list[np.ndarray] = []
    masks: list[np.ndarray] = []
    for img, anno in zip(images, annotations, strict=True):
        img = check_rgb_image(img)
        anno = check_label_map(anno)
        check_same_shape(img, anno, "image and annotation")
        nuclei = epithelial_mask(img)
        masks.append(nuclei)
        labels, count = label_components(nuclei)
        if count == 0:
            continue
        feats, cents = component_features(img, labels, z=z)
        h, w = anno.shape
        lab = []
        for _, cx, cy in cents:
            px = min(max(int(np.floor(cx + 0.5)), 0), w - 1)
            py = min(max(int(np.floor(cy + 0.5)), 0), h - 1)
            lab.append(1 if anno[py, px] != 0 else 0)
        xs.append(feats)
        ys.append(np.asarray(lab, dtype=np.int8))
    if xs:
        out = np.concatenate(xs), np.concatenate(ys)
    else:
        out = np.zeros((0, FEATURE_DIM)), np.zeros((0,), dtype=np.int8)
    if return_masks:
        return out[0], out[1], masks
    return out
