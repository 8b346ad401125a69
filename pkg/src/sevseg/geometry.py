"""Box arithmetic shared by every other module.

Boxes are corner-encoded (xmin, ymin, xmax, ymax) in pixel coordinates with
the origin at the top-left corner, x growing rightward and y downward.
Aspect ratio is width/height, so a narrow tall digit such as "1" has a low
ratio. Digit classes are plain ints in 0..9 and scores plain floats in [0, 1],
validated at construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateBoxError, ValidationError

N_CLASSES = 10


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box; coordinates are real-valued and must be finite."""

    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def __post_init__(self) -> None:
        for v in (self.xmin, self.ymin, self.xmax, self.ymax):
            if not math.isfinite(v):
                raise ValidationError(f"non-finite box coordinate in {self.as_tuple()}")
        if self.xmin > self.xmax or self.ymin > self.ymax:
            raise ValidationError(f"inverted box {self.as_tuple()}")

    @property
    def width(self) -> float:
        return self.xmax - self.xmin

    @property
    def height(self) -> float:
        return self.ymax - self.ymin

    @property
    def area(self) -> float:
        return self.width * self.height

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.xmin, self.ymin, self.xmax, self.ymax)

    def scaled(self, factor: float) -> "BoundingBox":
        """Uniformly scale all corners about the origin."""
        return BoundingBox(self.xmin * factor, self.ymin * factor,
                           self.xmax * factor, self.ymax * factor)


@dataclass(frozen=True)
class Detection:
    """A proposed box with its digit class and confidence score."""

    box: BoundingBox
    label: int
    score: float

    def __post_init__(self) -> None:
        if not isinstance(self.label, int) or not 0 <= self.label < N_CLASSES:
            raise ValidationError(f"digit class out of range: {self.label!r}")
        if not math.isfinite(self.score) or not 0.0 <= self.score <= 1.0:
            raise ValidationError(f"score out of range: {self.score!r}")


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection area over union area; 0 when the union is empty."""
    iw = min(a.xmax, b.xmax) - max(a.xmin, b.xmin)
    ih = min(a.ymax, b.ymax) - max(a.ymin, b.ymin)
    if iw <= 0.0 or ih <= 0.0:
        inter = 0.0
    else:
        inter = iw * ih
    union = a.area + b.area - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def aspect_ratio(b: BoundingBox) -> float:
    """width/height of the box; raises on zero height."""
    if b.height <= 0.0:
        raise DegenerateBoxError(f"zero-height box {b.as_tuple()} has no aspect ratio")
    return b.width / b.height


def clip(b: BoundingBox, width: float, height: float) -> BoundingBox:
    """Clamp the box into [0, width] x [0, height]."""
    if width <= 0 or height <= 0:
        raise ValidationError(f"clip target must be positive, got {width}x{height}")
    return BoundingBox(
        min(max(b.xmin, 0.0), float(width)),
        min(max(b.ymin, 0.0), float(height)),
        min(max(b.xmax, 0.0), float(width)),
        min(max(b.ymax, 0.0), float(height)),
    )


def detection_sort_key(d: Detection) -> tuple:
    """Canonical ordering: score descending, then box corners, then class.

    Every ranked stage (NMS, top-k, metric matching) uses this key so results
    are deterministic even with tied scores.
    """
    return (-d.score, d.box.xmin, d.box.ymin, d.box.xmax, d.box.ymax, d.label)


def boxes_array(boxes) -> np.ndarray:
    """Stack BoundingBox values into an (N, 4) float array."""
    if not boxes:
        return np.zeros((0, 4), dtype=np.float64)
    return np.array([b.as_tuple() for b in boxes], dtype=np.float64)


def pairwise_iou(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """IoU matrix between (N, 4) and (M, 4) corner-encoded box arrays."""
    a = np.asarray(a, dtype=np.float64).reshape(-1, 4)
    b = np.asarray(b, dtype=np.float64).reshape(-1, 4)
    iw = np.clip(np.minimum(a[:, None, 2], b[None, :, 2])
                 - np.maximum(a[:, None, 0], b[None, :, 0]), 0.0, None)
    ih = np.clip(np.minimum(a[:, None, 3], b[None, :, 3])
                 - np.maximum(a[:, None, 1], b[None, :, 1]), 0.0, None)
    inter = iw * ih
    area_a = (a[:, 2] - a[:, 0]) * (a[:, 3] - a[:, 1])
    area_b = (b[:, 2] - b[:, 0]) * (b[:, 3] - b[:, 1])
    union = area_a[:, None] + area_b[None, :] - inter
    out = np.zeros_like(inter)
    np.divide(inter, union, out=out, where=union > 0.0)
    return out
