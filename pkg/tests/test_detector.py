import numpy as np
import pytest

from sevseg.detector import (DIGIT_SEGMENTS, MASK_TO_DIGIT, DetectorConfig, SegmentMask,
                             binarize, decode_mask, detect, find_candidates,
                             otsu_threshold, probe_and_decode)
from sevseg.geometry import BoundingBox
from sevseg.synth import SynthSpec, render, render_components


class TestSegmentMask:
    def test_bc_is_one(self):
        assert decode_mask(SegmentMask.from_letters("BC")) == 1

    def test_all_on_is_eight(self):
        assert decode_mask(SegmentMask.from_letters("ABCDEFG")) == 8

    def test_table_is_injective(self):
        assert len(MASK_TO_DIGIT) == 10
        assert sorted(MASK_TO_DIGIT.values()) == list(range(10))

    def test_non_table_masks_decode_to_none(self):
        for digit, segs in DIGIT_SEGMENTS.items():
            assert decode_mask(SegmentMask.from_letters(segs)) == digit
        assert decode_mask(SegmentMask.from_letters("AB")) is None
        assert decode_mask(SegmentMask.from_letters("")) is None

    def test_bit_packing(self):
        assert SegmentMask.from_letters("A").to_int() == 0b1000000
        assert SegmentMask.from_letters("G").to_int() == 0b0000001
        assert SegmentMask.from_letters("ABCDEFG").to_int() == 0b1111111


class TestBinarize:
    def test_all_black_gives_empty_foreground(self):
        img = np.zeros((20, 20, 3), dtype=np.uint8)
        assert not binarize(img).any()

    def test_polarity_invariance(self):
        spec_a = SynthSpec(rows=("8",), polarity="light-on-dark")
        spec_b = SynthSpec(rows=("8",), polarity="dark-on-light")
        mask_a = binarize(render(spec_a)[0])
        mask_b = binarize(render(spec_b)[0])
        assert np.array_equal(mask_a, mask_b)

    def test_foreground_matches_rendered_area(self):
        spec = SynthSpec(rows=("8",), polarity="light-on-dark")
        img, _ann = render(spec)
        scene, _boxes, _labels = render_components(spec)
        rendered = int(scene.sum())
        recovered = int(binarize(img).sum())
        assert abs(recovered - rendered) <= 0.02 * rendered

    def test_otsu_separates_bimodal(self):
        img = np.concatenate([np.full(500, 30.0), np.full(500, 220.0)])
        thr = otsu_threshold(img.reshape(25, 40))
        assert 30 <= thr < 220


class TestFindCandidates:
    def test_empty_raster(self):
        assert find_candidates(np.zeros((30, 30), dtype=bool)) == []

    def test_three_digit_display(self):
        spec = SynthSpec(rows=("385",))
        img, ann = render(spec)
        boxes = find_candidates(binarize(img))
        assert len(boxes) == 3
        for found, d in zip(boxes, sorted(ann.digits, key=lambda g: g.box.xmin)):
            assert found == d.box

    def test_speckle_noise_filtered(self):
        spec = SynthSpec(rows=("385",))
        img, _ann = render(spec)
        raster = binarize(img)
        before = len(find_candidates(raster))
        rng = np.random.default_rng(0)
        for _ in range(25):
            y, x = rng.integers(0, raster.shape[0]), rng.integers(0, raster.shape[1])
            raster[y, x] = True
        # single-pixel specks fall below the minimum area and change nothing
        assert len(find_candidates(raster)) == before

    def test_boxes_within_raster(self):
        spec = SynthSpec(rows=("1234", "567"))
        img, _ann = render(spec)
        raster = binarize(img)
        for b in find_candidates(raster):
            assert 0 <= b.xmin < b.xmax <= raster.shape[1]
            assert 0 <= b.ymin < b.ymax <= raster.shape[0]


class TestProbeAndDecode:
    @pytest.mark.parametrize("digit", range(10))
    @pytest.mark.parametrize("height", [16, 24, 40])
    def test_every_digit_decodes_to_itself(self, digit, height):
        canvas = (max(120, 8 * height), max(90, 5 * height))
        spec = SynthSpec(rows=(str(digit),), digit_height=height,
                         width=canvas[0], height=canvas[1])
        img, ann = render(spec)
        raster = binarize(img)
        cand = probe_and_decode(raster, ann.digits[0].box)
        assert cand.label == digit
        assert cand.score > 0.8

    def test_unknown_pattern_scores_zero(self):
        # top strip plus upper-right column: pattern "AB" is not a digit
        raster = np.zeros((60, 60), dtype=bool)
        raster[10:14, 10:40] = True
        raster[10:26, 36:40] = True
        cand = probe_and_decode(raster, BoundingBox(10.0, 10.0, 40.0, 40.0))
        assert cand.mask.letters() == "AB"
        assert cand.label is None
        assert cand.score == 0.0

    def test_scores_in_unit_range(self):
        spec = SynthSpec(rows=("0123456",), noise_sigma=10.0, seed=5)
        img, ann = render(spec)
        raster = binarize(img)
        for d in ann.digits:
            cand = probe_and_decode(raster, d.box)
            assert 0.0 <= cand.score <= 1.0


class TestDetect:
    def test_blank_image(self):
        assert detect(np.full((40, 40, 3), 128, dtype=np.uint8)) == []

    def test_deterministic(self):
        spec = SynthSpec(rows=("120", "80"), noise_sigma=6.0, seed=9)
        img, _ann = render(spec)
        assert detect(img) == detect(img)

    def test_detections_inside_image(self):
        spec = SynthSpec(rows=("907",), slant_deg=4.0)
        img, _ann = render(spec)
        for det in detect(img):
            assert 0 <= det.box.xmin < det.box.xmax <= img.shape[1]
            assert 0 <= det.box.ymin < det.box.ymax <= img.shape[0]

    def test_digit_one_is_single_component(self):
        spec = SynthSpec(rows=("1",))
        img, ann = render(spec)
        dets = detect(img)
        assert len(dets) == 1
        assert dets[0].label == 1
        assert dets[0].box == ann.digits[0].box
