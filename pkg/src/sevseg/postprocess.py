"""Detection post-processing: score filter, greedy NMS, top-k cap.

NMS is class-agnostic by default: overlapping proposals compete for the same
display digit even when they disagree on its class, so suppression must not
care about labels. Per-class suppression is available behind a flag for
comparison. All stages order ties with the canonical detection sort key, so
outputs are fully deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ValidationError
from .geometry import Detection, boxes_array, detection_sort_key, pairwise_iou

# Default confidence threshold per named architecture (each family member's
# sweet spot differs; these are the sweep optima the presets resolve to).
MODEL_SCORE_THRESHOLDS = {
    "efficientdet-d0": 0.3,
    "efficientdet-d1": 0.5,
    "efficientdet-d2": 0.5,
    "efficientdet-lite0": 0.2,
    "efficientdet-lite1": 0.3,
    "efficientdet-lite2": 0.2,
}


@dataclass(frozen=True)
class PostprocessConfig:
    score_threshold: float = 0.0
    iou_threshold: float = 0.5
    max_outputs: int = 7
    per_class: bool = False

    def __post_init__(self) -> None:
        if not 0.0 <= self.score_threshold <= 1.0:
            raise ValidationError(f"score_threshold must be in [0, 1]: {self.score_threshold}")
        if not 0.0 <= self.iou_threshold <= 1.0:
            raise ValidationError(f"iou_threshold must be in [0, 1]: {self.iou_threshold}")
        if self.max_outputs < 1:
            raise ValidationError(f"max_outputs must be >= 1: {self.max_outputs}")


def default_threshold_for(model: str) -> float:
    key = model.strip().lower()
    if key not in MODEL_SCORE_THRESHOLDS:
        known = ", ".join(sorted(MODEL_SCORE_THRESHOLDS))
        raise ValidationError(f"unknown model '{model}' (known: {known})")
    return MODEL_SCORE_THRESHOLDS[key]


def filter_by_score(dets: list[Detection], threshold: float) -> list[Detection]:
    """Keep detections with score >= threshold, preserving input order."""
    return [d for d in dets if d.score >= threshold]


def nms(dets: list[Detection], iou_threshold: float,
        per_class: bool = False) -> list[Detection]:
    """Greedy suppression: keep the best remaining detection, drop everything
    overlapping it with IoU strictly above the threshold.

    Output is sorted by descending score (canonical tie-breaks).
    """
    if not dets:
        return []
    ranked = sorted(dets, key=detection_sort_key)
    ious = pairwise_iou(boxes_array([d.box for d in ranked]),
                        boxes_array([d.box for d in ranked]))
    suppressed = [False] * len(ranked)
    kept: list[Detection] = []
    for i, det in enumerate(ranked):
        if suppressed[i]:
            continue
        kept.append(det)
        for j in range(i + 1, len(ranked)):
            if suppressed[j]:
                continue
            if per_class and ranked[j].label != det.label:
                continue
            if ious[i, j] > iou_threshold:
                suppressed[j] = True
    return kept


def top_k(dets: list[Detection], k: int) -> list[Detection]:
    """The k highest-scoring detections (all when fewer), score-descending."""
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    return sorted(dets, key=detection_sort_key)[:k]


def postprocess(dets: list[Detection],
                config: PostprocessConfig = PostprocessConfig()) -> list[Detection]:
    """Score filter, then NMS, then the top-k cap."""
    kept = filter_by_score(dets, config.score_threshold)
    kept = nms(kept, config.iou_threshold, per_class=config.per_class)
    return top_k(kept, config.max_outputs)
