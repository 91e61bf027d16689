"""Gland boundary construction.

Two regimes, selected per image by the endpoint-neighbor ratio of the
nucleus mask skeleton: densely packed boundaries (thick) are closed by
growing lines outward from the classified mask under an intensity-mean
stopping rule; sparse boundaries (thin) are closed by linking skeleton
endpoints of the classified mask to nearby nucleus endpoints and keeping
enclosed holes that hug the classified mask.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .preprocess import DiffusionParams, perona_malik
from .raster import (
    _line_pixels,
    area_filter,
    endpoints,
    fill_holes,
    label_components,
    majority_filter,
    sobel,
    thin,
)
from .validation import check_binary_mask, check_rgb_image, check_same_shape

# unit steps for the 8 direction bins at 0, 45, ..., 315 degrees, (dx, dy)
# with y down; bin b covers angles within 22.5 degrees of b * 45
_STEPS = ((1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1))


@dataclass(frozen=True)
class LineGrowParams:
    """Controls for outward line growth along boundary normals."""

    window: int = 5
    k: float = 45.0
    bins: int = 8
    max_steps: int = 100

    def __post_init__(self):
        if self.window < 3 or self.window % 2 == 0:
            raise ValueError(f"window must be odd and >= 3, got {self.window}")
        if not self.k > 0:
            raise ValueError(f"k must be > 0, got {self.k}")
        if self.bins != 8:
            raise ValueError("only 8 direction bins are supported")
        if self.max_steps < 1:
            raise ValueError(f"max_steps must be >= 1, got {self.max_steps}")


@dataclass(frozen=True)
class ThinLinkParams:
    """Controls for endpoint linking of sparse boundaries."""

    p: float = 10.0
    p2: float = 20.0
    n_iter: int = 5

    def __post_init__(self):
        if not self.p > 0:
            raise ValueError(f"p must be > 0, got {self.p}")
        if not self.p2 > 0:
            raise ValueError(f"p2 must be > 0, got {self.p2}")
        if self.n_iter < 1:
            raise ValueError(f"n_iter must be >= 1, got {self.n_iter}")


@dataclass(frozen=True)
class BoundaryKind:
    """Regime decision for one image: 'thin' iff ratio < threshold."""

    kind: str
    ratio: float
    threshold: float


@dataclass
class GlandSegmentation:
    """Final regions (label map + count) with the regime decision and the
    intermediate masks that produced them."""

    regions: np.ndarray
    count: int
    kind: BoundaryKind | None = None
    intermediates: dict = field(default_factory=dict)


def endpoint_neighbor_ratio(mask: np.ndarray, p: float = 10.0) -> float:
    """Mean number of nearby foreign endpoints per skeleton endpoint.

    The mask is thinned; for every skeleton endpoint the endpoints of
    *other* skeleton components within Euclidean distance p are counted.
    A mask without endpoints scores 0.
    """
    mask = check_binary_mask(mask)
    if not p > 0:
        raise ValueError(f"p must be > 0, got {p}")
    skel = thin(mask)
    pts = endpoints(skel)
    if len(pts) == 0:
        return 0.0
    labels, _ = label_components(skel)
    comp = labels[pts[:, 1], pts[:, 0]]
    pairs = cKDTree(pts).query_pairs(p, output_type="ndarray")
    if len(pairs) == 0:
        return 0.0
    cross = int((comp[pairs[:, 0]] != comp[pairs[:, 1]]).sum())
    return 2.0 * cross / len(pts)


def compute_threshold_nth(masks, p: float = 10.0) -> float:
    """Regime threshold: mean over images of the per-image endpoint
    neighbor ratio (itself a per-endpoint mean)."""
    ratios = [endpoint_neighbor_ratio(m, p) for m in masks]
    if not ratios:
        raise ValueError("need at least one mask to compute a threshold")
    return float(np.mean(ratios))


def classify_boundary_kind(mask: np.ndarray, n_th: float, p: float = 10.0) -> BoundaryKind:
    """Pick the boundary regime for one image's nucleus mask."""
    ratio = endpoint_neighbor_ratio(mask, p)
    return BoundaryKind("thin" if ratio < n_th else "thick", ratio, float(n_th))


def window_mean_map(field: np.ndarray, window: int) -> np.ndarray:
    """Mean of each pixel's window x window neighborhood, cropped at the
    image border (partial windows average their in-bounds part)."""
    if window < 1 or window % 2 == 0:
        raise ValueError(f"window must be odd and >= 1, got {window}")
    field = np.asarray(field, dtype=np.float64)
    h, w = field.shape
    ii = np.zeros((h + 1, w + 1), dtype=np.float64)
    ii[1:, 1:] = field.cumsum(axis=0).cumsum(axis=1)
    half = window // 2
    y0 = np.maximum(np.arange(h) - half, 0)[:, None]
    y1 = np.minimum(np.arange(h) + half + 1, h)[:, None]
    x0 = np.maximum(np.arange(w) - half, 0)[None, :]
    x1 = np.minimum(np.arange(w) + half + 1, w)[None, :]
    total = ii[y1, x1] - ii[y0, x1] - ii[y1, x0] + ii[y0, x0]
    return total / ((y1 - y0) * (x1 - x0))


def grow_lines_thick(classified: np.ndarray, smoothed_red: np.ndarray,
                     params: LineGrowParams = LineGrowParams()) -> np.ndarray:
    """Grow lines outward from the classified mask's boundary pixels.

    Every classified pixel with nonzero Sobel response walks along the
    8-bin direction of the outward boundary normal (the negated gradient).
    The reference mean m1 is the window mean of the smoothed red channel at
    the start pixel; the walk marks pixels while |m1 - m2| < k for the mean
    m2 at each new pixel, and stops at the image border, on reaching the
    classified mask again, or after max_steps pixels.
    """
    classified = check_binary_mask(classified)
    smoothed = np.asarray(smoothed_red, dtype=np.float64)
    check_same_shape(classified, smoothed, "mask and smoothed channel")
    h, w = classified.shape
    means = window_mean_map(smoothed, params.window)
    magnitude, direction = sobel(classified)
    # outward normal = gradient + pi; quantize to the nearest of 8 bins
    sector = 2.0 * np.pi / params.bins
    bins = np.floor((direction + np.pi) / sector + 0.5).astype(np.int64) % params.bins
    out = classified.copy()
    start_ys, start_xs = np.nonzero(classified & (magnitude > 0))
    for y0, x0 in zip(start_ys.tolist(), start_xs.tolist()):
        dx, dy = _STEPS[bins[y0, x0]]
        m1 = means[y0, x0]
        y, x = y0, x0
        for _ in range(params.max_steps):
            y += dy
            x += dx
            if not (0 <= y < h and 0 <= x < w):
                break
            if classified[y, x]:
                break
            if abs(m1 - means[y, x]) >= params.k:
                break
            out[y, x] = True
    return out


def construct_thick(classified: np.ndarray, img: np.ndarray,
                    grow: LineGrowParams = LineGrowParams(),
                    diffusion: DiffusionParams = DiffusionParams(),
                    min_area: int = 0) -> GlandSegmentation:
    """Close densely packed boundaries: diffuse the red channel, grow lines
    from the classified mask, clean with a majority vote, fill the enclosed
    interiors, and drop small components.
    """
    classified = check_binary_mask(classified)
    img = check_rgb_image(img)
    check_same_shape(classified, img, "mask and image")
    smoothed = perona_malik(img[..., 0], diffusion)
    grown = grow_lines_thick(classified, smoothed, grow)
    closed = majority_filter(grown)
    filled = fill_holes(closed)
    kept = area_filter(filled, min_area)
    regions, count = label_components(kept)
    return GlandSegmentation(regions, count, intermediates={
        "grown": grown, "closed": closed, "filled": filled,
    })


def link_endpoints_thin(classified: np.ndarray, nuclei: np.ndarray,
                        params: ThinLinkParams = ThinLinkParams()) -> np.ndarray:
    """Link sparse boundaries into a mesh.

    For n_iter rounds, the mesh (initially the classified mask) and the
    nucleus mask are thinned; every mesh skeleton endpoint connects by a
    straight line to each nucleus skeleton endpoint within distance p2,
    except points already 8-connected to it within the mesh. The mesh only
    ever gains pixels.
    """
    classified = check_binary_mask(classified)
    nuclei = check_binary_mask(nuclei)
    check_same_shape(classified, nuclei, "masks")
    mesh = classified.copy()
    # the nucleus mask never changes, so its skeleton endpoints are fixed
    targets = endpoints(thin(nuclei))
    if len(targets) == 0:
        return mesh
    tree = cKDTree(targets)
    for _ in range(params.n_iter):
        sources = endpoints(thin(mesh))
        if len(sources) == 0:
            break
        labels, _ = label_components(mesh)
        lines = np.zeros_like(mesh)
        added = False
        for ex, ey in sources.tolist():
            own = labels[ey, ex]
            for ti in tree.query_ball_point((ex, ey), params.p2):
                tx, ty = targets[ti]
                if labels[ty, tx] == own:
                    continue
                xs, ys = _line_pixels(ex, ey, int(tx), int(ty))
                lines[ys, xs] = True
                added = True
        if not added:
            break
        mesh |= lines
    return mesh


def identify_gland_holes(mesh: np.ndarray, classified: np.ndarray,
                         border_fraction: float = 0.5, band: float = 3.0,
                         min_area: int = 0) -> GlandSegmentation:
    """Extract gland regions from a linked mesh.

    Candidate regions are the mesh's holes (filled minus mesh). A hole is
    kept iff at least border_fraction of its inner boundary pixels lie
    within `band` Euclidean distance of the classified mask; survivors are
    area-filtered and relabeled.
    """
    mesh = check_binary_mask(mesh)
    classified = check_binary_mask(classified)
    check_same_shape(mesh, classified, "masks")
    if not 0 < border_fraction <= 1:
        raise ValueError(f"border_fraction must be in (0, 1], got {border_fraction}")
    if band < 0:
        raise ValueError(f"band must be >= 0, got {band}")
    holes = fill_holes(mesh) & ~mesh
    labels, n = label_components(holes)
    empty_intermediates = {"mesh": mesh, "holes": holes}
    if n == 0:
        return GlandSegmentation(labels, 0, intermediates=empty_intermediates)
    inner = holes & ~ndimage.binary_erosion(holes, structure=np.ones((3, 3), bool))
    if classified.any():
        dist = ndimage.distance_transform_edt(~classified)
        near = (dist <= band)[inner]
    else:
        near = np.zeros(int(inner.sum()), dtype=bool)
    which = labels[inner]
    hits = np.bincount(which, weights=near.astype(np.float64), minlength=n + 1)
    sizes = np.bincount(which, minlength=n + 1)
    keep = np.zeros(n + 1, dtype=bool)
    keep[1:] = hits[1:] >= border_fraction * sizes[1:]
    kept = area_filter(keep[labels], min_area)
    regions, count = label_components(kept)
    return GlandSegmentation(regions, count, intermediates=empty_intermediates)
