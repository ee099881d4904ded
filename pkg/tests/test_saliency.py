import numpy as np
import pytest

from stagekit.errors import BackendUnavailableError, InvalidInputError
from stagekit.imaging import BinaryMask, Image, SaliencyMap, composite, uniform_image
from stagekit.saliency import (BorderContrastSaliency, SaliencyConfig, binarize,
                               detect_saliency, make_saliency_backend,
                               segment_product)
from synth import product_image, rect_mask

BACKEND = BorderContrastSaliency()


class TestBorderContrast:
    def test_uniform_white_all_zero(self):
        smap = detect_saliency(uniform_image(32, 32, (255, 255, 255)), BACKEND)
        assert (smap.values == 0.0).all()

    def test_red_block_on_white(self):
        img = product_image(32, rect_mask(32, 10, 10, 4, 4), (255, 0, 0))
        smap = detect_saliency(img, BACKEND)
        block = np.zeros((32, 32), dtype=bool)
        block[10:14, 10:14] = True
        # direct color-distance oracle: distance is constant on the block,
        # zero off it, so after max-normalization the map is exactly {0, 1}
        assert (smap.values[block] == 1.0).all()
        assert (smap.values[~block] == 0.0).all()

    def test_determinism(self):
        rng = np.random.default_rng(9)
        img = Image(rng.integers(0, 256, (24, 24, 3), dtype=np.uint8))
        a = detect_saliency(img, BACKEND)
        b = detect_saliency(img, BACKEND)
        assert np.array_equal(a.values, b.values)

    def test_border_color_pixels_score_zero(self):
        # any pixel matching the solid border color must score exactly 0
        img = product_image(20, rect_mask(20, 5, 5, 6, 6), (0, 100, 200),
                            background=(37, 41, 43))
        smap = detect_saliency(img, BACKEND)
        bg = ~rect_mask(20, 5, 5, 6, 6).values
        assert (smap.values[bg] == 0.0).all()

    def test_values_in_range(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            img = Image(rng.integers(0, 256, (16, 16, 3), dtype=np.uint8))
            smap = detect_saliency(img, BACKEND)
            assert smap.values.min() >= 0.0
            assert smap.values.max() <= 1.0


class TestBinarize:
    def test_all_zero_map(self):
        smap = SaliencyMap(np.zeros((4, 4)))
        assert not binarize(smap).values.any()

    def test_exact_threshold_is_background(self):
        smap = SaliencyMap(np.full((4, 4), 0.5))
        assert not binarize(smap, SaliencyConfig(0.5)).values.any()

    def test_strict_comparison_table(self):
        smap = SaliencyMap(np.array([[0.2, 0.9], [0.5, 0.51]]))
        out = binarize(smap, SaliencyConfig(0.5))
        assert out.values.tolist() == [[False, True], [False, True]]

    def test_exhaustive_sweep(self):
        vals = np.round(np.linspace(0.0, 1.0, 101), 10)
        smap = SaliencyMap(vals.reshape(1, -1))
        for thr in (0.25, 0.5, 0.75):
            out = binarize(smap, SaliencyConfig(thr))
            assert np.array_equal(out.values[0], vals > thr)

    def test_monotone_in_threshold(self):
        rng = np.random.default_rng(13)
        smap = SaliencyMap(rng.random((16, 16)))
        prev = binarize(smap, SaliencyConfig(0.1)).values
        for thr in (0.3, 0.5, 0.7, 0.9):
            cur = binarize(smap, SaliencyConfig(thr)).values
            assert not (cur & ~prev).any()  # raising threshold never adds pixels
            prev = cur

    def test_threshold_validation(self):
        with pytest.raises(InvalidInputError):
            SaliencyConfig(0.0)
        with pytest.raises(InvalidInputError):
            SaliencyConfig(1.0)


class TestSegmentProduct:
    def test_all_true_returns_image(self):
        rng = np.random.default_rng(17)
        img = Image(rng.integers(0, 256, (8, 8, 3), dtype=np.uint8))
        out = segment_product(img, BinaryMask(np.ones((8, 8), dtype=bool)))
        assert np.array_equal(out.array, img.array)

    def test_all_false_uniform_fill(self):
        rng = np.random.default_rng(18)
        img = Image(rng.integers(0, 256, (8, 8, 3), dtype=np.uint8))
        out = segment_product(img, BinaryMask(np.zeros((8, 8), dtype=bool)),
                              fill=(1, 2, 3))
        assert (out.array == np.array([1, 2, 3], dtype=np.uint8)).all()

    def test_matches_composite_identity(self):
        rng = np.random.default_rng(19)
        img = Image(rng.integers(0, 256, (12, 12, 3), dtype=np.uint8))
        ys, xs = np.mgrid[0:12, 0:12]
        mask = BinaryMask((xs + ys) % 2 == 0)
        fill = (200, 10, 60)
        expected = composite(uniform_image(12, 12, fill), img, mask)
        out = segment_product(img, mask, fill)
        assert np.array_equal(out.array, expected.array)

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidInputError):
            segment_product(uniform_image(4, 4, (0, 0, 0)),
                            BinaryMask(np.zeros((5, 5), dtype=bool)))


class TestBackendFactory:
    def test_border_contrast(self):
        assert make_saliency_backend("border-contrast").name == "border-contrast"

    def test_u2net_missing_file(self, tmp_path):
        with pytest.raises(BackendUnavailableError):
            make_saliency_backend("u2net", tmp_path / "nope.pt")

    def test_u2net_without_path(self):
        with pytest.raises(BackendUnavailableError):
            make_saliency_backend("u2net")

    def test_unknown_backend(self):
        with pytest.raises(InvalidInputError):
            make_saliency_backend("mystery")
