import random

import pytest

from sevseg.errors import ValidationError
from sevseg.metrics import (COCO_IOU_THRESHOLDS, DEFAULT_SWEEP_GRID, CocoReport,
                            ConfusionMatrix, PrfReport, average_precision, coco_report,
                            confusion, match, prf, sweep)

import oracles
from conftest import (gt_as_detections, make_annotation_set, make_detection_set,
                      random_instance)


def sets_from(images):
    return make_annotation_set(images), make_detection_set(images)


class TestMatch:
    def test_perfect_detector_all_tp(self):
        images = gt_as_detections(random_instance(random.Random(1)))
        gt, det = sets_from(images)
        result = match(gt, det, 0.5)
        assert result.fp == 0 and result.fn == 0
        assert result.tp == gt.total_digits()

    def test_empty_detections_all_fn(self):
        images = [("a.png", [((5.0, 5.0, 15.0, 25.0), 3),
                             ((30.0, 5.0, 40.0, 25.0), 1)], [])]
        gt, det = sets_from(images)
        result = match(gt, det, 0.5)
        assert result.tp == 0 and result.fp == 0 and result.fn == 2

    def test_two_detections_one_gt(self):
        box = (10.0, 10.0, 20.0, 30.0)
        images = [("a.png", [(box, 5)],
                   [(box, 5, 0.9), ((11.0, 10.0, 21.0, 30.0), 5, 0.7)])]
        gt, det = sets_from(images)
        result = match(gt, det, 0.5)
        assert result.tp == 1 and result.fp == 1 and result.fn == 0
        # the higher-scoring detection holds the match
        (i1, gt1), (i2, gt2) = result.images[0].det_to_gt
        assert gt1 == 0 and gt2 is None

    def test_class_sensitivity(self):
        box = (10.0, 10.0, 20.0, 30.0)
        images = [("a.png", [(box, 5)], [(box, 6, 0.9)])]
        gt, det = sets_from(images)
        assert match(gt, det, 0.5, class_sensitive=True).tp == 0
        assert match(gt, det, 0.5, class_sensitive=False).tp == 1

    def test_file_mismatch_lists_difference(self):
        gt, _ = sets_from([("a.png", [], [])])
        _, det = sets_from([("b.png", [], [])])
        with pytest.raises(ValidationError, match=r"a\.png.*b\.png"):
            match(gt, det, 0.5)

    def test_accounting_identities(self):
        rng = random.Random(2)
        for _ in range(50):
            images = random_instance(rng)
            gt, det = sets_from(images)
            result = match(gt, det, 0.5, class_sensitive=False)
            n_dets = sum(len(d) for _f, _g, d in images)
            assert result.tp + result.fn == gt.total_digits()
            assert result.tp + result.fp == n_dets


class TestAveragePrecision:
    def test_perfect_detector(self):
        images = gt_as_detections(random_instance(random.Random(3)))
        gt, det = sets_from(images)
        for t in (0.5, 0.75, 0.95):
            _per_class, mean = average_precision(gt, det, t)
            assert mean == 1.0

    def test_mean_of_two_classes(self):
        # class 1 perfect; class 2 has a spurious higher-ranked detection
        images = [("a.png",
                   [((10.0, 10.0, 20.0, 30.0), 1), ((40.0, 10.0, 50.0, 30.0), 2)],
                   [((10.0, 10.0, 20.0, 30.0), 1, 0.9),
                    ((60.0, 50.0, 70.0, 70.0), 2, 0.9),
                    ((40.0, 10.0, 50.0, 30.0), 2, 0.8)])]
        gt, det = sets_from(images)
        per_class, mean = average_precision(gt, det, 0.5)
        assert per_class[1] == 1.0
        assert per_class[2] == 0.5
        assert mean == 0.75

    def test_absent_classes_excluded(self):
        images = [("a.png", [((10.0, 10.0, 20.0, 30.0), 4)],
                   [((10.0, 10.0, 20.0, 30.0), 4, 1.0)])]
        gt, det = sets_from(images)
        per_class, mean = average_precision(gt, det, 0.5)
        assert set(per_class) == {4}
        assert mean == 1.0

    def test_oracle_equality_small_sample(self):
        rng = random.Random(4)
        for _ in range(30):
            images = random_instance(rng)
            gt, det = sets_from(images)
            for t in (0.5, 0.75):
                ours = average_precision(gt, det, t)[1]
                assert ours == pytest.approx(oracles.mean_ap(images, t), abs=1e-12)

    def test_monotone_in_iou_threshold(self):
        rng = random.Random(5)
        for _ in range(30):
            images = random_instance(rng)
            gt, det = sets_from(images)
            values = [average_precision(gt, det, t)[1] for t in COCO_IOU_THRESHOLDS]
            for lo, hi in zip(values, values[1:]):
                assert hi <= lo + 1e-12


class TestCocoReport:
    def test_perfect_detector_all_ones(self):
        rng = random.Random(6)
        # single-digit images so AR^1 is attainable
        images = [(f"im{i}.png", [((10.0 + i, 10.0, 24.0 + i, 38.0), i % 10)], [])
                  for i in range(6)]
        images = gt_as_detections(images)
        gt, det = sets_from(images)
        report = coco_report(gt, det)
        assert (report.map, report.ap50, report.ap75, report.ar1, report.ar10) == \
               (1.0, 1.0, 1.0, 1.0, 1.0)

    def test_reference_scores_fixture(self):
        # reference scores for a strong mobile detector satisfy all invariants
        report = CocoReport(map=0.834, ap50=0.995, ap75=0.975, ar1=0.711, ar10=0.863)
        assert report.map <= report.ap50
        assert report.ar1 <= report.ar10
        assert report.as_dict()["mAP"] == 0.834

    def test_ar1_not_above_ar10(self):
        rng = random.Random(7)
        for _ in range(25):
            images = random_instance(rng)
            gt, det = sets_from(images)
            report = coco_report(gt, det)
            assert report.ar1 <= report.ar10 + 1e-12

    def test_map_not_above_ap50(self):
        rng = random.Random(8)
        for _ in range(25):
            images = random_instance(rng)
            gt, det = sets_from(images)
            report = coco_report(gt, det)
            assert report.map <= report.ap50 + 1e-12

    def test_oracle_equality_small_sample(self):
        rng = random.Random(9)
        for _ in range(15):
            images = random_instance(rng)
            gt, det = sets_from(images)
            ours = coco_report(gt, det)
            ref = oracles.coco_metrics(images)
            assert ours.map == pytest.approx(ref["map"], abs=1e-12)
            assert ours.ap50 == pytest.approx(ref["ap50"], abs=1e-12)
            assert ours.ap75 == pytest.approx(ref["ap75"], abs=1e-12)
            assert ours.ar1 == pytest.approx(ref["ar1"], abs=1e-12)
            assert ours.ar10 == pytest.approx(ref["ar10"], abs=1e-12)


class TestPrf:
    def test_near_perfect_counts_round_to_three_decimals(self):
        # 438 digits, 3 missed, none spurious
        report = PrfReport(tp=435, fp=0, fn=3)
        assert round(report.precision, 3) == 1.000
        assert round(report.recall, 3) == 0.993
        assert round(report.f1, 3) == 0.997

    def test_zero_detections_convention(self):
        images = [("a.png", [((5.0, 5.0, 15.0, 25.0), 3)], [])]
        gt, det = sets_from(images)
        report = prf(gt, det, 0.5)
        assert report.precision == 1.0
        assert report.recall == 0.0
        assert report.f1 == 0.0

    def test_handcrafted_counts(self):
        gt_boxes = [((10.0 * i, 10.0, 10.0 * i + 8.0, 30.0), i % 10) for i in range(10)]
        dets = [(box, label, 0.9) for box, label in gt_boxes[:8]]      # 2 misses
        dets.append(((0.0, 60.0, 8.0, 75.0), 0, 0.8))                  # 1 spurious
        images = [("a.png", gt_boxes, dets)]
        gt, det = sets_from(images)
        report = prf(gt, det, 0.5)
        assert (report.tp, report.fp, report.fn) == (8, 1, 2)

    def test_score_filter_monotone(self):
        rng = random.Random(10)
        for _ in range(25):
            images = random_instance(rng)
            gt, det = sets_from(images)
            last_tp, last_fp = None, None
            for t in DEFAULT_SWEEP_GRID:
                report = prf(gt, det, t)
                if last_tp is not None:
                    assert report.tp <= last_tp
                    assert report.fp <= last_fp
                last_tp, last_fp = report.tp, report.fp


class TestSweep:
    def test_grid_has_19_thresholds(self):
        assert len(DEFAULT_SWEEP_GRID) == 19
        assert DEFAULT_SWEEP_GRID[0] == 0.05
        assert DEFAULT_SWEEP_GRID[-1] == 0.95

    def test_perfect_scores_tie_break_low(self):
        images = gt_as_detections(random_instance(random.Random(11)), score=1.0)
        gt, det = sets_from(images)
        result = sweep(gt, det)
        assert all(row.report.f1 == 1.0 for row in result.rows)
        assert result.best.threshold == 0.05

    def test_planted_false_positives_push_threshold(self):
        # real detections score >= 0.6, junk scores < 0.4
        gts = [((10.0 * i, 10.0, 10.0 * i + 8.0, 30.0), i % 10) for i in range(6)]
        dets = [(box, label, 0.6 + 0.05 * i) for i, (box, label) in enumerate(gts)]
        dets += [((60.0 + 3 * j, 60.0, 70.0 + 3 * j, 75.0), 0, 0.35 - 0.05 * j)
                 for j in range(4)]
        images = [("a.png", gts, dets)]
        gt, det = sets_from(images)
        result = sweep(gt, det)
        assert result.best.threshold == pytest.approx(0.4)
        # exhaustive check against the oracle grid
        best_ref, best_f1 = None, -1.0
        for t in DEFAULT_SWEEP_GRID:
            tp, fp, fn = oracles.prf_counts(images, t, 0.5)
            f1 = oracles.f1_of(oracles.precision_of(tp, fp), oracles.recall_of(tp, fn))
            if f1 > best_f1:
                best_ref, best_f1 = t, f1
        assert result.best.threshold == best_ref

    def test_rows_match_oracle(self):
        rng = random.Random(12)
        images = random_instance(rng)
        gt, det = sets_from(images)
        for row in sweep(gt, det).rows:
            tp, fp, fn = oracles.prf_counts(images, row.threshold, 0.5)
            assert (row.report.tp, row.report.fp, row.report.fn) == (tp, fp, fn)


class TestConfusion:
    def test_perfect_detector_diagonal(self):
        images = gt_as_detections(random_instance(random.Random(13)))
        gt, det = sets_from(images)
        matrix = confusion(gt, det, 0.5)
        assert matrix.accuracy == 1.0
        assert matrix.total == matrix.trace

    def test_worst_case_fixture_418_of_424(self):
        # 424 digits; six detections carry a wrong class
        images = []
        remaining_errors = 6
        digit_id = 0
        for i in range(61):
            n = 7 if i < 60 else 4
            gts, dets = [], []
            for k in range(n):
                box = (12.0 * k, 10.0, 12.0 * k + 9.0, 30.0)
                label = digit_id % 10
                digit_id += 1
                gts.append((box, label))
                pred = label
                if remaining_errors > 0:
                    pred = (label + 1) % 10
                    remaining_errors -= 1
                dets.append((box, pred, 1.0))
            images.append((f"im{i}.png", gts, dets))
        gt, det = sets_from(images)
        matrix = confusion(gt, det, 0.5)
        assert matrix.total == 424
        assert matrix.trace == 418
        assert matrix.accuracy == pytest.approx(418 / 424)
        assert round(matrix.accuracy, 3) == 0.986

    def test_total_equals_prf_tp(self):
        rng = random.Random(14)
        for _ in range(30):
            images = random_instance(rng)
            gt, det = sets_from(images)
            for t in (0.05, 0.4, 0.8):
                assert confusion(gt, det, t).total == prf(gt, det, t).tp

    def test_row_sums_follow_matched_gt_classes(self):
        rng = random.Random(15)
        images = random_instance(rng)
        gt, det = sets_from(images)
        matrix = confusion(gt, det, 0.0)
        result = match(gt, det, 0.5, class_sensitive=False)
        per_class = [0] * 10
        for im, orig in zip(result.images, sorted(gt.images, key=lambda x: x.file)):
            for matched, g in zip(im.gt_matched, orig.digits):
                if matched:
                    per_class[g.label] += 1
        assert [sum(row) for row in matrix.counts] == per_class

    def test_matrix_oracle_equality(self):
        rng = random.Random(16)
        for _ in range(20):
            images = random_instance(rng)
            gt, det = sets_from(images)
            ours = confusion(gt, det, 0.3)
            assert [list(r) for r in ours.counts] == \
                   oracles.confusion_counts(images, 0.3, 0.5)


def test_confusion_matrix_type_invariants():
    counts = [[0] * 10 for _ in range(10)]
    counts[3][3] = 5
    counts[3][8] = 1
    m = ConfusionMatrix(counts=tuple(tuple(r) for r in counts))
    assert m.total == 6
    assert m.trace == 5
    assert m.accuracy == pytest.approx(5 / 6)
