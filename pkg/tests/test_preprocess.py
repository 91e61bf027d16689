"""Thresholding and diffusion tests. Otsu results are compared against an
exhaustive enumeration oracle with exact integer scoring."""

import numpy as np
import pytest

from glandseg import (
    DegenerateInputError,
    DiffusionParams,
    OtsuResult,
    darkest_segment,
    epithelial_mask,
    multi_otsu,
    perona_malik,
)
from oracles import otsu_reference


def five_mode_image(rng, shape=(24, 24), spread=9):
    """Pixels drawn near five well-separated centers, narrow spread.

    Centers stay below 64 so the exhaustive 4-threshold oracle (every
    ascending tuple up to the max occupied intensity) remains tractable.
    """
    base = int(rng.integers(4, 10))
    centers = base + spread * np.arange(5) + rng.integers(0, 3, 5)
    modes = rng.integers(0, 5, shape)
    noise = rng.integers(-2, 3, shape)
    return np.clip(centers[modes] + noise, 0, 255).astype(np.uint8)


class TestMultiOtsu:
    def test_two_classes_matches_exhaustive(self):
        rng = np.random.default_rng(20)
        for _ in range(30):
            img = rng.integers(0, 256, (16, 16)).astype(np.uint8)
            got = multi_otsu(img, classes=2).thresholds
            assert got == otsu_reference(img, 2)

    def test_five_classes_matches_exhaustive(self):
        rng = np.random.default_rng(21)
        for _ in range(5):
            img = five_mode_image(rng)
            t_hi = int(img.max())  # keeps the oracle's search space feasible
            got = multi_otsu(img, classes=5).thresholds
            assert got == otsu_reference(img, 5, t_hi=t_hi)

    def test_five_spikes(self):
        # equal-mass spikes: any threshold in (v_k, v_{k+1}] separates the
        # same way, so the lexicographic tie-break lands on v_k + 1
        img = np.repeat(
            np.array([10, 40, 100, 150, 220], np.uint8), 20
        ).reshape(10, 10)
        res = multi_otsu(img, classes=5)
        assert res.thresholds == (11, 41, 101, 151)
        assert sorted(np.unique(res.class_map)) == [0, 1, 2, 3, 4]

    def test_class_map_is_threshold_count(self):
        rng = np.random.default_rng(22)
        img = rng.integers(0, 256, (20, 20)).astype(np.uint8)
        res = multi_otsu(img, classes=4)
        ths = np.array(res.thresholds)
        want = (img[..., None] >= ths).sum(axis=-1)
        assert np.array_equal(res.class_map, want.astype(np.uint8))

    def test_thresholds_in_valid_range(self):
        rng = np.random.default_rng(23)
        for _ in range(10):
            img = rng.integers(0, 256, (12, 12)).astype(np.uint8)
            ths = multi_otsu(img, classes=3).thresholds
            assert len(ths) == 2
            assert all(1 <= t <= 254 for t in ths)
            assert list(ths) == sorted(set(ths))

    def test_tiebreak_is_lexicographically_smallest(self):
        # two spikes at 10 and 20: every threshold in 11..20 scores the same
        img = np.repeat(np.array([10, 20], np.uint8), 8).reshape(4, 4)
        assert multi_otsu(img, classes=2).thresholds == (11,)

    def test_too_few_distinct_values(self):
        img = np.repeat(np.array([5, 60, 130, 200], np.uint8), 4).reshape(4, 4)
        with pytest.raises(DegenerateInputError):
            multi_otsu(img, classes=5)
        with pytest.raises(DegenerateInputError):
            multi_otsu(np.full((4, 4), 7, np.uint8), classes=2)

    def test_rejects_bad_classes(self):
        img = np.zeros((4, 4), np.uint8)
        with pytest.raises(ValueError):
            multi_otsu(img, classes=1)


class TestDarkestSegment:
    def test_selects_class_zero(self):
        rng = np.random.default_rng(24)
        img = rng.integers(0, 256, (16, 16)).astype(np.uint8)
        res = multi_otsu(img, classes=3)
        mask = darkest_segment(img, res)
        assert np.array_equal(mask, res.class_map == 0)
        assert mask.any()

    def test_logs_when_empty(self, caplog):
        img = np.full((4, 4), 100, np.uint8)
        fake = OtsuResult(thresholds=(50,), class_map=np.ones((4, 4), np.uint8))
        with caplog.at_level("WARNING", logger="glandseg.preprocess"):
            mask = darkest_segment(img, fake)
        assert not mask.any()
        assert any("empty" in r.message for r in caplog.records)

    def test_shape_mismatch(self):
        img = np.zeros((4, 4), np.uint8)
        res = OtsuResult(thresholds=(1,), class_map=np.zeros((5, 5), np.uint8))
        with pytest.raises(ValueError):
            darkest_segment(img, res)


class TestEpithelialMask:
    def test_selects_darkest_pixels(self):
        rng = np.random.default_rng(25)
        img = rng.integers(0, 256, (24, 24, 3)).astype(np.uint8)
        mask = epithelial_mask(img)
        from glandseg import to_grayscale

        gray = to_grayscale(img)
        res = multi_otsu(gray, classes=5)
        assert np.array_equal(mask, res.class_map == 0)

    def test_flat_image_gives_empty_mask(self):
        img = np.full((16, 16, 3), 180, np.uint8)
        mask = epithelial_mask(img)
        assert mask.shape == (16, 16) and not mask.any()


class TestPeronaMalik:
    def test_constant_is_fixed_point(self):
        img = np.full((10, 10), 67, np.uint8)
        out = perona_malik(img)
        assert np.allclose(out, 67.0)

    def test_max_principle_and_mean(self):
        rng = np.random.default_rng(26)
        img = rng.integers(0, 256, (20, 20)).astype(np.uint8)
        out = perona_malik(img, DiffusionParams(iterations=25, kappa=30, step=0.25))
        assert out.min() >= img.min() - 1e-9
        assert out.max() <= img.max() + 1e-9
        # zero-flux borders conserve total mass
        assert np.isclose(out.mean(), img.astype(np.float64).mean())

    def test_single_step_matches_literal_update(self):
        rng = np.random.default_rng(27)
        img = rng.integers(0, 256, (6, 7)).astype(np.uint8)
        params = DiffusionParams(iterations=1, kappa=25.0, step=0.2)
        got = perona_malik(img, params)

        u = img.astype(np.float64)
        h, w = u.shape
        want = u.copy()
        for y in range(h):
            for x in range(w):
                acc = 0.0
                for dy, dx in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                    ny = min(max(y + dy, 0), h - 1)
                    nx = min(max(x + dx, 0), w - 1)
                    d = u[ny, nx] - u[y, x]
                    acc += np.exp(-((d / params.kappa) ** 2)) * d
                want[y, x] = u[y, x] + params.step * acc
        assert np.allclose(got, want, atol=1e-12)

    def test_smooths_hot_pixel(self):
        img = np.zeros((9, 9), np.uint8)
        img[4, 4] = 40  # small contrast diffuses readily
        out = perona_malik(img, DiffusionParams(iterations=10, kappa=30, step=0.2))
        assert out[4, 4] < 40
        assert out[4, 3] > 0

    def test_preserves_strong_edge(self):
        img = np.zeros((10, 10), np.uint8)
        img[:, 5:] = 255
        out = perona_malik(img, DiffusionParams(iterations=15, kappa=10, step=0.2))
        # conduction is nearly shut off across a 255-step edge
        assert out[:, :4].max() < 20
        assert out[:, 6:].min() > 235

    def test_param_validation(self):
        with pytest.raises(ValueError):
            DiffusionParams(iterations=0)
        with pytest.raises(ValueError):
            DiffusionParams(kappa=0)
        with pytest.raises(ValueError):
            DiffusionParams(step=0.3)
        with pytest.raises(ValueError):
            DiffusionParams(step=0.0)

    def test_returns_float_copy(self):
        img = np.zeros((5, 5), np.uint8)
        out = perona_malik(img)
        assert out.dtype == np.float64
