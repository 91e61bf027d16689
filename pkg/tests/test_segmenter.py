"""Estimator-level behavior: parameter plumbing, threshold resolution, and
segmentation on synthetic tissue."""

import numpy as np
import pytest
from sklearn.base import clone

from glandseg import (
    DegenerateInputError,
    GlandSegmenter,
    PipelineConfig,
    RandomForest,
    dice,
    load_forest,
    save_forest,
)
from phantoms import make_phantom


@pytest.fixture(scope="module")
def trained():
    train = [make_phantom(300 + i, ("thin", "thick")[i % 2]) for i in range(4)]
    seg = GlandSegmenter(n_trees=40, n_split_features=12, seed=7, min_area=300)
    seg.fit([p.image for p in train], [p.annotation for p in train])
    return seg


class TestEstimatorApi:
    def test_get_set_params_roundtrip(self):
        seg = GlandSegmenter(n_trees=10, p2=15.0)
        params = seg.get_params()
        assert params["n_trees"] == 10 and params["p2"] == 15.0
        other = clone(seg)
        assert other.get_params() == params
        other.set_params(n_trees=20)
        assert other.n_trees == 20 and seg.n_trees == 10

    def test_from_config_covers_every_field(self):
        cfg = PipelineConfig(n_trees=33, border_band=2.0, n_th=0.7)
        seg = GlandSegmenter.from_config(cfg)
        assert seg.get_params() == cfg.to_dict()

    def test_fit_sets_state(self, trained):
        assert hasattr(trained, "forest_") and hasattr(trained, "n_th_")
        summary = trained.training_summary_
        assert summary["images"] == 4
        assert summary["samples"] > summary["positives"] > 0
        assert summary["n_th"] == trained.n_th_


class TestThresholdResolution:
    def test_unfitted_segment_rejected(self):
        img = np.zeros((32, 32, 3), np.uint8)
        with pytest.raises(ValueError, match="no model"):
            GlandSegmenter().segment(img)

    def test_explicit_n_th_wins(self, trained):
        override = clone(trained).set_params(n_th=123.0)
        override.attach_model(trained.forest_)
        override.n_th_ = 0.5
        assert override._resolved_n_th() == 123.0

    def test_attach_model_picks_up_metadata(self, trained, tmp_path):
        path = tmp_path / "m.bin"
        save_forest(trained.forest_, path, metadata={"n_th": 0.77})
        seg = GlandSegmenter().attach_model(load_forest(path))
        assert seg._resolved_n_th() == 0.77

    def test_missing_threshold_raises(self):
        X = np.random.default_rng(0).normal(size=(40, 3))
        y = (X[:, 0] > 0).astype(int)
        forest = RandomForest(n_trees=3, n_split_features=2).fit(X, y)
        seg = GlandSegmenter().attach_model(forest)
        with pytest.raises(ValueError, match="threshold"):
            seg._resolved_n_th()


class TestSegment:
    def test_rejects_tiny_images(self, trained):
        with pytest.raises(DegenerateInputError):
            trained.segment(np.zeros((15, 64, 3), np.uint8))

    def test_flat_image_yields_no_regions(self, trained):
        seg = trained.segment(np.full((48, 48, 3), 230, np.uint8))
        assert seg.count == 0 and not seg.regions.any()
        assert seg.kind.kind == "thin" and seg.kind.ratio == 0.0

    def test_segments_phantoms_of_both_kinds(self, trained):
        for kind in ("thin", "thick"):
            phantom = make_phantom(777 if kind == "thin" else 778, kind)
            seg = trained.segment(phantom.image)
            assert seg.kind.kind == kind
            assert seg.count >= 1
            assert dice(seg.regions > 0, phantom.annotation > 0) >= 0.7
            assert {"nuclei", "classified"} <= set(seg.intermediates)

    def test_predict_batches(self, trained):
        phantom = make_phantom(779, "thin")
        maps = trained.predict([phantom.image, phantom.image])
        assert len(maps) == 2
        assert np.array_equal(maps[0], maps[1])
        assert maps[0].dtype == np.int32
