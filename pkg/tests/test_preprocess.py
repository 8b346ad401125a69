import random

import numpy as np
import pytest

from sevseg.geometry import BoundingBox
from sevseg.preprocess import (MODEL_INPUT_SIZES, bilinear_resize, input_size_for,
                               letterbox, letterbox_transform, load_image, normalize,
                               prepare_model_input, save_image, to_model_frame,
                               to_original_frame)


class TestLetterbox:
    def test_square_input_no_padding(self):
        t = letterbox_transform(500, 500, 384)
        assert t.scale == pytest.approx(0.768)
        assert t.pad_right == 0 and t.pad_bottom == 0

    def test_landscape_photo(self):
        # 4032x3024 to 384: content 384x288, 96 rows of padding at the bottom
        t = letterbox_transform(4032, 3024, 384)
        assert t.scale == pytest.approx(384 / 4032)
        assert t.pad_right == 0
        assert t.pad_bottom == 96

    def test_named_models_resolve_input_sizes(self):
        assert input_size_for("efficientdet-lite1") == 384
        assert sorted(MODEL_INPUT_SIZES.values()) == [320, 384, 448, 512, 640, 768]

    def test_output_is_square_and_zero_padded(self):
        img = np.full((30, 60, 3), 200, dtype=np.uint8)
        out, t = letterbox(img, 64)
        assert out.shape == (64, 64, 3)
        assert t.pad_bottom == 32 and t.pad_right == 0
        assert np.all(out[32:, :, :] == 0.0)
        assert np.all(out[:32, :, :] == 200.0)

    def test_at_most_one_pad_side(self):
        rng = random.Random(5)
        for _ in range(50):
            w, h = rng.randint(1, 900), rng.randint(1, 900)
            t = letterbox_transform(w, h, 384)
            assert t.pad_right == 0 or t.pad_bottom == 0
            assert t.pad_right >= 0 and t.pad_bottom >= 0

    def test_content_aspect_preserved(self):
        rng = random.Random(11)
        for _ in range(50):
            w, h = rng.randint(10, 1200), rng.randint(10, 1200)
            t = letterbox_transform(w, h, 448)
            cw, ch = 448 - t.pad_right, 448 - t.pad_bottom
            # content within one rounding pixel of the exact scaled size
            assert abs(cw - w * t.scale) <= 0.5
            assert abs(ch - h * t.scale) <= 0.5


class TestNormalize:
    def test_constant_image_maps_to_zero(self):
        img = np.full((8, 8, 3), 77.0)
        assert np.all(normalize(img) == 0.0)

    def test_two_pixel_example(self):
        out = normalize(np.array([0.0, 2.0]))
        assert out.tolist() == [-1.0, 1.0]

    def test_zero_mean_unit_std(self):
        rng = np.random.default_rng(3)
        img = rng.uniform(0, 255, size=(32, 32, 3))
        out = normalize(img)
        assert abs(out.mean()) < 1e-5
        assert abs(out.std() - 1.0) < 1e-5

    def test_idempotent(self):
        rng = np.random.default_rng(4)
        img = rng.uniform(0, 255, size=(16, 16, 3))
        once = normalize(img)
        assert np.allclose(normalize(once), once, atol=1e-9)

    def test_affine_invariance(self):
        rng = np.random.default_rng(5)
        img = rng.uniform(0, 255, size=(16, 16, 3))
        assert np.allclose(normalize(img * 3.25 + 17.0), normalize(img), atol=1e-9)


class TestModelInput:
    def test_padded_region_stays_zero_after_normalization(self):
        rng = np.random.default_rng(6)
        img = rng.uniform(0, 255, size=(40, 90, 3))
        out, t = prepare_model_input(img, 96)
        ch = 96 - t.pad_bottom
        assert np.all(out[ch:, :, :] == 0.0)
        content = out[:ch, : 96 - t.pad_right, :]
        assert abs(content.mean()) < 1e-9


class TestFrameMapping:
    def test_identity_transform(self):
        t = letterbox_transform(384, 384, 384)
        b = BoundingBox(3.0, 4.0, 100.0, 120.0)
        assert to_model_frame(b, t) == b
        assert to_original_frame(b, t) == b

    def test_uniform_scaling(self):
        t = letterbox_transform(200, 100, 100)  # scale 0.5
        assert to_model_frame(BoundingBox(0, 0, 100, 100), t) == BoundingBox(0, 0, 50, 50)

    def test_round_trip_random_boxes(self):
        rng = random.Random(77)
        worst = 0.0
        for _ in range(1000):
            w, h = rng.randint(10, 4000), rng.randint(10, 4000)
            t = letterbox_transform(w, h, rng.choice([320, 384, 448, 512, 640, 768]))
            x0, y0 = rng.uniform(0, w - 1), rng.uniform(0, h - 1)
            b = BoundingBox(x0, y0, x0 + rng.uniform(0.1, w - x0), y0 + rng.uniform(0.1, h - y0))
            back = to_original_frame(to_model_frame(b, t), t)
            worst = max(worst, *(abs(u - v) for u, v in zip(back.as_tuple(), b.as_tuple())))
        assert worst < 1e-6


class TestResampleAndIo:
    def test_bilinear_identity(self):
        rng = np.random.default_rng(8)
        img = rng.uniform(0, 255, size=(17, 23, 3))
        assert np.allclose(bilinear_resize(img, 23, 17), img, atol=1e-9)

    def test_bilinear_constant(self):
        img = np.full((10, 10, 3), 42.0)
        out = bilinear_resize(img, 7, 13)
        assert out.shape == (13, 7, 3)
        assert np.allclose(out, 42.0)

    def test_png_round_trip(self, tmp_path):
        rng = np.random.default_rng(9)
        img = rng.integers(0, 256, size=(20, 30, 3), dtype=np.uint8)
        path = tmp_path / "x.png"
        save_image(img, path)
        assert np.array_equal(load_image(path), img)
