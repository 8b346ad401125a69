"""Detection evaluation: greedy matching, COCO AP/AR, PRF, sweep, confusion.

Conventions (shared by every operation here):

* Detections are ranked by the canonical sort key (score descending, then box
  corners, then class), globally ranked lists additionally order by file name
  before the box key.
* Matching is greedy in rank order; each detection takes the unmatched
  ground-truth box with the highest IoU >= threshold (ties to the lowest GT
  index). Unmatched detections are false positives, unmatched ground truth
  false negatives; true negatives do not exist in this evaluation.
* AP uses 101-point interpolation of the score-ranked precision/recall curve,
  per class, excluding classes with no ground truth from means. mAP averages
  AP over the ten IoU thresholds 0.50..0.95.
* AR^k truncates each image to its k highest-score detections (regardless of
  class), then averages per-class recall over classes and over the same ten
  thresholds.
* Detection PRF matches class-insensitively by default - localization quality
  is judged here, classification separately by the confusion matrix - with a
  class-sensitive variant behind a flag.
* Degenerate denominators: precision and recall are 1.0 when their
  denominator is 0 (vacuously perfect), F1 is 0.0 when P + R = 0. Means over
  an empty class set (a ground-truth set with no digits) are 1.0 vacuously.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass

from .data import AnnotationSet, DetectionSet, GroundTruthDigit
from .errors import ValidationError
from .geometry import N_CLASSES, Detection, boxes_array, detection_sort_key, pairwise_iou

COCO_IOU_THRESHOLDS = tuple((50 + 5 * i) / 100 for i in range(10))
DEFAULT_SWEEP_GRID = tuple((5 * i) / 100 for i in range(1, 20))


# ---------------------------------------------------------------------------
# Pairing and greedy matching

@dataclass(frozen=True, eq=False)
class _PairedImage:
    file: str
    gts: tuple[GroundTruthDigit, ...]
    dets: tuple[Detection, ...]        # rank order
    det_indices: tuple[int, ...]       # original index of each ranked detection
    ious: list[list[float]]            # ranked det x gt


def _paired(gt: AnnotationSet, dets: DetectionSet) -> list[_PairedImage]:
    gt_by_file = {img.file: img for img in gt.images}
    det_by_file = {img.file: img for img in dets.images}
    if gt_by_file.keys() != det_by_file.keys():
        only_gt = sorted(gt_by_file.keys() - det_by_file.keys())
        only_det = sorted(det_by_file.keys() - gt_by_file.keys())
        raise ValidationError(
            "ground truth and detections cover different images: "
            f"only in ground truth {only_gt}, only in detections {only_det}")
    out = []
    for file in sorted(gt_by_file):
        gts = gt_by_file[file].digits
        raw = det_by_file[file].detections
        order = sorted(range(len(raw)), key=lambda i: detection_sort_key(raw[i]))
        ranked = tuple(raw[i] for i in order)
        if ranked and gts:
            matrix = pairwise_iou(boxes_array([d.box for d in ranked]),
                                  boxes_array([g.box for g in gts])).tolist()
        else:
            matrix = [[0.0] * len(gts) for _ in ranked]
        out.append(_PairedImage(file=file, gts=gts, dets=ranked,
                                det_indices=tuple(order), ious=matrix))
    return out


def _greedy(dets: tuple[Detection, ...], ious: list[list[float]],
            gts: tuple[GroundTruthDigit, ...], iou_threshold: float,
            class_sensitive: bool) -> list[int | None]:
    """Assignment (gt index or None) per detection, in the given det order."""
    taken = [False] * len(gts)
    out: list[int | None] = []
    for i, det in enumerate(dets):
        best_j: int | None = None
        best_v = -1.0
        for j, g in enumerate(gts):
            if taken[j]:
                continue
            if class_sensitive and g.label != det.label:
                continue
            v = ious[i][j]
            if v >= iou_threshold and v > best_v:
                best_v, best_j = v, j
        if best_j is not None:
            taken[best_j] = True
        out.append(best_j)
    return out


@dataclass(frozen=True)
class ImageMatches:
    file: str
    det_to_gt: tuple[tuple[int, int | None], ...]   # (original det index, gt index)
    gt_matched: tuple[bool, ...]


@dataclass(frozen=True)
class MatchResult:
    images: tuple[ImageMatches, ...]
    iou_threshold: float
    class_sensitive: bool

    @property
    def tp(self) -> int:
        return sum(1 for im in self.images for _, j in im.det_to_gt if j is not None)

    @property
    def fp(self) -> int:
        return sum(1 for im in self.images for _, j in im.det_to_gt if j is None)

    @property
    def fn(self) -> int:
        return sum(1 for im in self.images for m in im.gt_matched if not m)


def match(gt: AnnotationSet, dets: DetectionSet, iou_threshold: float,
          class_sensitive: bool = True) -> MatchResult:
    """Greedy score-ordered matching over the whole image set."""
    images = []
    for pim in _paired(gt, dets):
        assign = _greedy(pim.dets, pim.ious, pim.gts, iou_threshold, class_sensitive)
        matched = [False] * len(pim.gts)
        for j in assign:
            if j is not None:
                matched[j] = True
        images.append(ImageMatches(
            file=pim.file,
            det_to_gt=tuple(zip(pim.det_indices, assign)),
            gt_matched=tuple(matched)))
    return MatchResult(images=tuple(images), iou_threshold=iou_threshold,
                       class_sensitive=class_sensitive)


# ---------------------------------------------------------------------------
# Average precision

def _ap_101(flags: list[bool], ranks: list[tuple], n_gt: int) -> float:
    """101-point interpolated AP from globally ranked TP/FP flags."""
    order = sorted(range(len(flags)), key=lambda i: ranks[i])
    tp = fp = 0
    recalls: list[float] = []
    precisions: list[float] = []
    for i in order:
        if flags[i]:
            tp += 1
        else:
            fp += 1
        recalls.append(tp / n_gt)
        precisions.append(tp / (tp + fp))
    # Precision envelope: best precision at or beyond each position.
    envelope = precisions[:]
    for i in range(len(envelope) - 2, -1, -1):
        envelope[i] = max(envelope[i], envelope[i + 1])
    total = 0.0
    for k in range(101):
        r = k / 100
        pos = bisect_left(recalls, r)
        total += envelope[pos] if pos < len(envelope) else 0.0
    return total / 101


def _ap_at(pairs: list[_PairedImage], iou_threshold: float) -> dict[int, float]:
    """Per-class AP at a single IoU threshold; classes without GT excluded."""
    classes = sorted({g.label for pim in pairs for g in pim.gts})
    result: dict[int, float] = {}
    for c in classes:
        n_gt = sum(1 for pim in pairs for g in pim.gts if g.label == c)
        flags: list[bool] = []
        ranks: list[tuple] = []
        for pim in pairs:
            det_ids = [i for i, d in enumerate(pim.dets) if d.label == c]
            gt_ids = [j for j, g in enumerate(pim.gts) if g.label == c]
            sub_dets = tuple(pim.dets[i] for i in det_ids)
            sub_ious = [[pim.ious[i][j] for j in gt_ids] for i in det_ids]
            sub_gts = tuple(pim.gts[j] for j in gt_ids)
            assign = _greedy(sub_dets, sub_ious, sub_gts, iou_threshold, False)
            for d, a in zip(sub_dets, assign):
                flags.append(a is not None)
                ranks.append((-d.score, pim.file, d.box.xmin, d.box.ymin,
                              d.box.xmax, d.box.ymax, d.label))
        result[c] = _ap_101(flags, ranks, n_gt)
    return result


def average_precision(gt: AnnotationSet, dets: DetectionSet,
                      iou_threshold: float) -> tuple[dict[int, float], float]:
    """Per-class AP and their mean at one IoU threshold (1.0 with no GT)."""
    per_class = _ap_at(_paired(gt, dets), iou_threshold)
    if not per_class:
        return per_class, 1.0
    mean = sum(per_class[c] for c in sorted(per_class)) / len(per_class)
    return per_class, mean


# ---------------------------------------------------------------------------
# COCO report

@dataclass(frozen=True)
class CocoReport:
    map: float
    ap50: float
    ap75: float
    ar1: float
    ar10: float

    def __post_init__(self) -> None:
        values = (self.map, self.ap50, self.ap75, self.ar1, self.ar10)
        if any(not 0.0 <= v <= 1.0 for v in values):
            raise ValidationError(f"metrics outside [0, 1]: {values}")
        if self.ar1 > self.ar10 + 1e-12:
            raise ValidationError(f"AR^1 {self.ar1} exceeds AR^10 {self.ar10}")

    def as_dict(self) -> dict[str, float]:
        return {"mAP": self.map, "AP50": self.ap50, "AP75": self.ap75,
                "AR1": self.ar1, "AR10": self.ar10}


def _mean_ap(pairs: list[_PairedImage], iou_threshold: float) -> float:
    per_class = _ap_at(pairs, iou_threshold)
    if not per_class:
        return 1.0
    return sum(per_class[c] for c in sorted(per_class)) / len(per_class)


def _mean_recall(pairs: list[_PairedImage], iou_threshold: float, k: int) -> float:
    classes = sorted({g.label for pim in pairs for g in pim.gts})
    if not classes:
        return 1.0
    matched = {c: 0 for c in classes}
    totals = {c: 0 for c in classes}
    for pim in pairs:
        for g in pim.gts:
            totals[g.label] += 1
        keep = min(k, len(pim.dets))
        for c in classes:
            det_ids = [i for i in range(keep) if pim.dets[i].label == c]
            gt_ids = [j for j, g in enumerate(pim.gts) if g.label == c]
            if not det_ids or not gt_ids:
                continue
            sub_dets = tuple(pim.dets[i] for i in det_ids)
            sub_ious = [[pim.ious[i][j] for j in gt_ids] for i in det_ids]
            sub_gts = tuple(pim.gts[j] for j in gt_ids)
            assign = _greedy(sub_dets, sub_ious, sub_gts, iou_threshold, False)
            matched[c] += sum(1 for a in assign if a is not None)
    return sum(matched[c] / totals[c] for c in classes) / len(classes)


def coco_report(gt: AnnotationSet, dets: DetectionSet) -> CocoReport:
    """mAP over IoU 0.50..0.95 plus AP50, AP75, AR^1 and AR^10.

    AR^100 is intentionally absent: with at most seven digits per display it
    always equals AR^10.
    """
    pairs = _paired(gt, dets)
    aps = [_mean_ap(pairs, t) for t in COCO_IOU_THRESHOLDS]
    ar1 = sum(_mean_recall(pairs, t, 1) for t in COCO_IOU_THRESHOLDS) / len(COCO_IOU_THRESHOLDS)
    ar10 = sum(_mean_recall(pairs, t, 10) for t in COCO_IOU_THRESHOLDS) / len(COCO_IOU_THRESHOLDS)
    return CocoReport(map=sum(aps) / len(aps), ap50=aps[0], ap75=aps[5],
                      ar1=ar1, ar10=ar10)


# ---------------------------------------------------------------------------
# Precision / recall / F1 and the threshold sweep

@dataclass(frozen=True)
class PrfReport:
    tp: int
    fp: int
    fn: int

    @property
    def precision(self) -> float:
        return 1.0 if self.tp + self.fp == 0 else self.tp / (self.tp + self.fp)

    @property
    def recall(self) -> float:
        return 1.0 if self.tp + self.fn == 0 else self.tp / (self.tp + self.fn)

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 0.0 if p + r == 0.0 else 2.0 * p * r / (p + r)


def prf(gt: AnnotationSet, dets: DetectionSet, score_threshold: float,
        iou_threshold: float = 0.5, class_sensitive: bool = False) -> PrfReport:
    """Detection PRF after score filtering; class-insensitive by default."""
    tp = fp = fn = 0
    for pim in _paired(gt, dets):
        keep = [i for i, d in enumerate(pim.dets) if d.score >= score_threshold]
        sub_dets = tuple(pim.dets[i] for i in keep)
        sub_ious = [pim.ious[i] for i in keep]
        assign = _greedy(sub_dets, sub_ious, pim.gts, iou_threshold, class_sensitive)
        n_matched = sum(1 for a in assign if a is not None)
        tp += n_matched
        fp += len(sub_dets) - n_matched
        fn += len(pim.gts) - n_matched
    return PrfReport(tp=tp, fp=fp, fn=fn)


@dataclass(frozen=True)
class SweepRow:
    threshold: float
    report: PrfReport


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]

    @property
    def best(self) -> SweepRow:
        """Row with the highest F1; ties break toward the lower threshold."""
        best = self.rows[0]
        for row in self.rows[1:]:
            if row.report.f1 > best.report.f1:
                best = row
        return best


def sweep(gt: AnnotationSet, dets: DetectionSet,
          grid: tuple[float, ...] = DEFAULT_SWEEP_GRID,
          iou_threshold: float = 0.5) -> SweepResult:
    """PRF at every score threshold of the grid (default 0.05..0.95 by 0.05)."""
    if not grid:
        raise ValidationError("sweep grid must not be empty")
    rows = tuple(SweepRow(threshold=t,
                          report=prf(gt, dets, t, iou_threshold))
                 for t in grid)
    return SweepResult(rows=rows)


# ---------------------------------------------------------------------------
# Confusion matrix

@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts over true-positive matches; rows true class, columns predicted."""

    counts: tuple[tuple[int, ...], ...]

    @property
    def total(self) -> int:
        return sum(sum(row) for row in self.counts)

    @property
    def trace(self) -> int:
        return sum(self.counts[i][i] for i in range(N_CLASSES))

    @property
    def accuracy(self) -> float:
        total = self.total
        return 1.0 if total == 0 else self.trace / total


def confusion(gt: AnnotationSet, dets: DetectionSet, score_threshold: float,
              iou_threshold: float = 0.5) -> ConfusionMatrix:
    """Class confusion over class-insensitive true-positive matches only."""
    counts = [[0] * N_CLASSES for _ in range(N_CLASSES)]
    for pim in _paired(gt, dets):
        keep = [i for i, d in enumerate(pim.dets) if d.score >= score_threshold]
        sub_dets = tuple(pim.dets[i] for i in keep)
        sub_ious = [pim.ious[i] for i in keep]
        assign = _greedy(sub_dets, sub_ious, pim.gts, iou_threshold, False)
        for det, j in zip(sub_dets, assign):
            if j is not None:
                counts[pim.gts[j].label][det.label] += 1
    return ConfusionMatrix(counts=tuple(tuple(row) for row in counts))
