"""End-to-end gland segmentation estimator.

fit() learns a nucleus classifier and the boundary-regime threshold from
annotated images; segment() runs the full pipeline on one image; predict()
maps a batch of images to region label maps.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .boundary import (
    GlandSegmentation,
    LineGrowParams,
    ThinLinkParams,
    classify_boundary_kind,
    compute_threshold_nth,
    construct_thick,
    identify_gland_holes,
    link_endpoints_thin,
)
from .errors import DegenerateInputError
from .features import build_training_set, component_features
from .forest import RandomForest
from .preprocess import DiffusionParams, epithelial_mask
from .raster import label_components
from .validation import check_rgb_image


class GlandSegmenter(BaseEstimator):
    """Trainable gland segmenter.

    Candidate nuclei (darkest of five Otsu classes) are classified as
    epithelial or not by a random forest over 135 appearance features; the
    surviving nuclei are closed into gland boundaries by one of two
    geometric constructions, chosen per image by comparing the nucleus
    skeleton's endpoint-neighbor ratio against the threshold learned from
    the training images.
    """

    def __init__(self, z: int = 24, window: int = 5, n_trees: int = 500,
                 n_split_features: int = 20, k: float = 45.0, seed: int = 0,
                 diffusion_iterations: int = 15, diffusion_kappa: float = 30.0,
                 diffusion_step: float = 0.20, max_depth: int = 25,
                 min_leaf_size: int = 2, max_steps: int = 100,
                 min_area: int | None = None, p: float = 10.0, p2: float = 20.0,
                 n_link_iter: int = 5, border_fraction: float = 0.5,
                 border_band: float = 3.0, n_th: float | None = None):
        self.z = z
        self.window = window
        self.n_trees = n_trees
        self.n_split_features = n_split_features
        self.k = k
        self.seed = seed
        self.diffusion_iterations = diffusion_iterations
        self.diffusion_kappa = diffusion_kappa
        self.diffusion_step = diffusion_step
        self.max_depth = max_depth
        self.min_leaf_size = min_leaf_size
        self.max_steps = max_steps
        self.min_area = min_area
        self.p = p
        self.p2 = p2
        self.n_link_iter = n_link_iter
        self.border_fraction = border_fraction
        self.border_band = border_band
        self.n_th = n_th

    @classmethod
    def from_config(cls, config) -> "GlandSegmenter":
        return cls(**config.estimator_kwargs())

    def fit(self, images, annotations) -> "GlandSegmenter":
        """Train the nucleus forest and learn the regime threshold."""
        X, y, masks = build_training_set(images, annotations, z=self.z,
                                         return_masks=True)
        if len(y) == 0:
            raise ValueError("no candidate nuclei found in the training images")
        forest = RandomForest(
            n_trees=self.n_trees, n_split_features=self.n_split_features,
            max_depth=self.max_depth, min_leaf_size=self.min_leaf_size,
            seed=self.seed,
        )
        self.forest_ = forest.fit(X, y)
        self.n_th_ = compute_threshold_nth(masks, p=self.p)
        self.training_summary_ = {
            "images": len(masks),
            "samples": int(len(y)),
            "positives": int(y.sum()),
            "n_th": self.n_th_,
        }
        return self

    def attach_model(self, forest: RandomForest) -> "GlandSegmenter":
        """Use an already-trained forest; picks up a stored regime
        threshold from the forest metadata when present."""
        self.forest_ = forest
        stored = getattr(forest, "metadata_", {}).get("n_th")
        if stored is not None:
            self.n_th_ = float(stored)
        return self

    def _resolved_n_th(self) -> float:
        if self.n_th is not None:
            return float(self.n_th)
        n_th = getattr(self, "n_th_", None)
        if n_th is None:
            raise ValueError(
                "no regime threshold available: fit the segmenter, attach a "
                "model that stores one, or set n_th explicitly"
            )
        return float(n_th)

    def segment(self, image) -> GlandSegmentation:
        """Segment one RGB image into gland regions."""
        img = check_rgb_image(image)
        h, w = img.shape[:2]
        if min(h, w) < 16:
            raise DegenerateInputError(
                f"image {w}x{h} is smaller than one feature window"
            )
        if not hasattr(self, "forest_"):
            raise ValueError("segmenter has no model; call fit or attach_model")
        n_th = self._resolved_n_th()

        nuclei = epithelial_mask(img)
        labels, count = label_components(nuclei)
        if count > 0:
            feats, _ = component_features(img, labels, z=self.z)
            votes = self.forest_.predict(feats)
            keep = np.zeros(count + 1, dtype=bool)
            keep[1:] = votes == 1
            classified = keep[labels]
        else:
            classified = np.zeros_like(nuclei)

        kind = classify_boundary_kind(nuclei, n_th, p=self.p)
        min_area = self.min_area if self.min_area is not None else round(0.001 * h * w)
        if kind.kind == "thick":
            seg = construct_thick(
                classified, img,
                grow=LineGrowParams(window=self.window, k=self.k,
                                    max_steps=self.max_steps),
                diffusion=DiffusionParams(self.diffusion_iterations,
                                          self.diffusion_kappa,
                                          self.diffusion_step),
                min_area=min_area,
            )
        else:
            mesh = link_endpoints_thin(
                classified, nuclei,
                ThinLinkParams(p=self.p, p2=self.p2, n_iter=self.n_link_iter),
            )
            seg = identify_gland_holes(
                mesh, classified, border_fraction=self.border_fraction,
                band=self.border_band, min_area=min_area,
            )
        seg.kind = kind
        seg.intermediates["nuclei"] = nuclei
        seg.intermediates["classified"] = classified
        return seg

    def predict(self, images) -> list[np.ndarray]:
        """Region label maps for a batch of images."""
        return [self.segment(img).regions for img in images]
