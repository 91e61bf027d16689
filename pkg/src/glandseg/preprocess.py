"""Intensity preprocessing: multi-level Otsu thresholding and anisotropic
diffusion smoothing.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError
from .raster import to_grayscale
from .validation import check_gray_image, check_rgb_image

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class OtsuResult:
    """Thresholds (strictly ascending, in [1, 254]) and the per-pixel class
    map they induce: class(p) = number of thresholds <= intensity(p)."""

    thresholds: tuple[int, ...]
    class_map: np.ndarray


@dataclass(frozen=True)
class DiffusionParams:
    """Anisotropic diffusion settings.

    step must stay in (0, 0.25] for the explicit 4-neighbor scheme to obey
    the maximum principle.
    """

    iterations: int = 15
    kappa: float = 30.0
    step: float = 0.20

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        if not self.kappa > 0:
            raise ValueError(f"kappa must be > 0, got {self.kappa}")
        if not 0 < self.step <= 0.25:
            raise ValueError(f"step must be in (0, 0.25], got {self.step}")


def multi_otsu(img: np.ndarray, classes: int = 5) -> OtsuResult:
    """Exhaustive multi-level Otsu thresholding over the 256-bin histogram.

    Maximizes between-class variance over all strictly ascending integer
    threshold tuples in [1, 254]; among maximizers the lexicographically
    smallest tuple is returned. The search is exact: class scores are kept
    as integer fractions and compared by cross-multiplication, so the
    tie-break never depends on float rounding.

    Raises DegenerateInputError when the image has fewer distinct
    intensities than classes.
    """
    img = check_gray_image(img)
    if classes < 2:
        raise ValueError(f"classes must be >= 2, got {classes}")
    hist = np.bincount(img.ravel(), minlength=256)
    occupied = np.flatnonzero(hist)
    if occupied.size < classes:
        raise DegenerateInputError(
            f"need at least {classes} distinct intensities, found {occupied.size}"
        )
    lo, hi = int(occupied[0]), int(occupied[-1])
    # python-int prefix sums: the objective sum((sum w*x)^2 / sum w) is
    # accumulated exactly, numerators and denominators unreduced
    wsum = [0] * 257
    msum = [0] * 257
    for i in range(256):
        c = int(hist[i])
        wsum[i + 1] = wsum[i] + c
        msum[i + 1] = msum[i] + c * i

    def term(a: int, b: int) -> tuple[int, int]:
        w = wsum[b] - wsum[a]
        if w == 0:
            return (0, 1)
        m = msum[b] - msum[a]
        return (m * m, w)

    # an optimal partition never has an empty class (splitting a class with
    # two distinct occupied intensities strictly raises the objective), so
    # every threshold lies in [lo + 1, hi]
    cut_lo, cut_hi = lo + 1, hi
    layers: list[dict[int, tuple[int, int]]] = [
        {a: term(a, 256) for a in range(cut_lo, cut_hi + 1)}
    ]
    for j in range(2, classes + 1):
        prev = layers[-1]
        starts = (0,) if j == classes else range(cut_lo, cut_hi + 1)
        cur: dict[int, tuple[int, int]] = {}
        for a in starts:
            bn, bd = -1, 1
            for t in range(max(a + 1, cut_lo), cut_hi + 1):
                sn, sd = prev[t]
                tn, td = term(a, t)
                n, d = tn * sd + sn * td, td * sd
                if n * bd > bn * d:
                    bn, bd = n, d
            cur[a] = (bn, bd)
        layers.append(cur)

    # front-to-back reconstruction: taking the smallest threshold that
    # still achieves the optimum at every step yields the lexicographically
    # smallest maximizing tuple
    thresholds: list[int] = []
    a = 0
    num, den = layers[classes - 1][0]
    for j in range(classes, 1, -1):
        prev = layers[j - 2]
        for t in range(max(a + 1, cut_lo), cut_hi + 1):
            sn, sd = prev[t]
            tn, td = term(a, t)
            n, d = tn * sd + sn * td, td * sd
            if n * den == num * d:
                thresholds.append(t)
                a, num, den = t, sn, sd
                break
        else:  # pragma: no cover - the optimum is always reachable
            raise AssertionError("threshold reconstruction failed")

    thr = np.asarray(thresholds, dtype=np.int64)
    class_map = np.searchsorted(thr, img.ravel(), side="right")
    return OtsuResult(tuple(thresholds), class_map.reshape(img.shape).astype(np.uint8))


def darkest_segment(img: np.ndarray, result: OtsuResult) -> np.ndarray:
    """Mask of pixels in the darkest Otsu class (class 0)."""
    img = check_gray_image(img)
    if result.class_map.shape != img.shape:
        raise ValueError("Otsu result does not match the image shape")
    mask = result.class_map == 0
    if not mask.any():
        logger.warning("darkest Otsu class is empty")
    return mask


def epithelial_mask(img: np.ndarray, classes: int = 5) -> np.ndarray:
    """Candidate nucleus mask: darkest of `classes` Otsu segments of the
    grayscale image. Images too flat to partition yield an empty mask.
    """
    img = check_rgb_image(img)
    gray = to_grayscale(img)
    try:
        result = multi_otsu(gray, classes=classes)
    except DegenerateInputError:
        return np.zeros(gray.shape, dtype=bool)
    return darkest_segment(gray, result)


def perona_malik(img: np.ndarray, params: DiffusionParams = DiffusionParams()) -> np.ndarray:
    """Edge-preserving smoothing by explicit anisotropic diffusion.

    Each iteration updates I <- I + step * sum_d g(|dI_d|) * dI_d over the
    four axial neighbor differences, with g(x) = exp(-(x / kappa)^2) and
    reflecting (zero-flux) borders. Returns float64; the mean intensity is
    conserved exactly up to float rounding.
    """
    img = check_gray_image(img)
    u = img.astype(np.float64)
    inv_k2 = 1.0 / (params.kappa * params.kappa)
    for _ in range(params.iterations):
        p = np.pad(u, 1, mode="edge")
        flux = np.zeros_like(u)
        for d in (p[:-2, 1:-1], p[2:, 1:-1], p[1:-1, :-2], p[1:-1, 2:]):
            diff = d - u
            flux += np.exp(-(diff * diff) * inv_k2) * diff
        u = u + params.step * flux
    return u
