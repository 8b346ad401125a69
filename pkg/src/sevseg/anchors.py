"""Multi-level anchor grid with an extended aspect-ratio set, plus coverage.

The grid follows the common single-stage detector convention: feature levels
3..7 with stride 2^level, three octave scales per position, base size
anchor_scale * stride. The ratio set defaults to {0.1, 0.3, 0.5, 1.0, 2.0} -
the usual {0.5, 1.0, 2.0} plus the two narrow ratios that cover tall thin
digits. Ratios follow the width/height orientation used everywhere else.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import AnnotationSet
from .errors import ValidationError
from .geometry import boxes_array, pairwise_iou
from .preprocess import letterbox_transform

DEFAULT_ASPECT_RATIOS = (0.1, 0.3, 0.5, 1.0, 2.0)
BASELINE_ASPECT_RATIOS = (0.5, 1.0, 2.0)


@dataclass(frozen=True)
class AnchorConfig:
    input_size: int
    min_level: int = 3
    max_level: int = 7
    octave_scales: tuple[float, ...] = (2 ** 0.0, 2 ** (1.0 / 3.0), 2 ** (2.0 / 3.0))
    anchor_scale: float = 4.0
    aspect_ratios: tuple[float, ...] = DEFAULT_ASPECT_RATIOS

    def __post_init__(self) -> None:
        if self.input_size <= 0:
            raise ValidationError(f"input_size must be positive, got {self.input_size}")
        if not 0 < self.min_level <= self.max_level:
            raise ValidationError(f"bad level range {self.min_level}..{self.max_level}")
        if not self.aspect_ratios or any(r <= 0 for r in self.aspect_ratios):
            raise ValidationError(f"aspect ratios must be positive: {self.aspect_ratios}")
        if list(self.aspect_ratios) != sorted(self.aspect_ratios):
            raise ValidationError(f"aspect ratios must be sorted: {self.aspect_ratios}")
        if not self.octave_scales or any(s <= 0 for s in self.octave_scales):
            raise ValidationError(f"octave scales must be positive: {self.octave_scales}")


@dataclass(frozen=True, eq=False)
class AnchorGrid:
    """All anchors for one input size, with per-anchor provenance indices."""

    boxes: np.ndarray       # (N, 4) corner-encoded, model frame
    levels: np.ndarray      # (N,) feature level
    scale_indices: np.ndarray
    ratio_indices: np.ndarray
    config: AnchorConfig

    def __len__(self) -> int:
        return self.boxes.shape[0]


def expected_count(config: AnchorConfig) -> int:
    """Closed-form anchor count: sum over levels of ceil(side/stride)^2 * S * R."""
    positions = sum(
        math.ceil(config.input_size / 2 ** level) ** 2
        for level in range(config.min_level, config.max_level + 1)
    )
    return positions * len(config.octave_scales) * len(config.aspect_ratios)


def generate(config: AnchorConfig) -> AnchorGrid:
    """Build the grid in a fixed order: level, row, column, scale, ratio.

    Anchor centers sit at ((i + 0.5) * stride, (j + 0.5) * stride); width is
    base * sqrt(ratio) and height base / sqrt(ratio) so width/height = ratio.
    Anchors near the border may extend past the input bounds; they are not
    clipped.
    """
    scales = np.asarray(config.octave_scales, dtype=np.float64)
    ratios = np.asarray(config.aspect_ratios, dtype=np.float64)
    n_scales, n_ratios = len(scales), len(ratios)

    # Per-position half sizes, in (scale, ratio) order.
    half_w = np.empty(n_scales * n_ratios)
    half_h = np.empty(n_scales * n_ratios)
    level_blocks: list[np.ndarray] = []
    levels: list[np.ndarray] = []

    s_idx = np.repeat(np.arange(n_scales), n_ratios)
    r_idx = np.tile(np.arange(n_ratios), n_scales)

    for level in range(config.min_level, config.max_level + 1):
        stride = 2 ** level
        base = config.anchor_scale * stride * scales
        w = base[:, None] * np.sqrt(ratios)[None, :]
        h = base[:, None] / np.sqrt(ratios)[None, :]
        half_w[:] = (w / 2.0).reshape(-1)
        half_h[:] = (h / 2.0).reshape(-1)

        n = math.ceil(config.input_size / stride)
        coords = (np.arange(n, dtype=np.float64) + 0.5) * stride
        cx = np.tile(coords, n)                # column varies fastest
        cy = np.repeat(coords, n)              # row-major
        boxes = np.empty((n * n, n_scales * n_ratios, 4), dtype=np.float64)
        boxes[:, :, 0] = cx[:, None] - half_w[None, :]
        boxes[:, :, 1] = cy[:, None] - half_h[None, :]
        boxes[:, :, 2] = cx[:, None] + half_w[None, :]
        boxes[:, :, 3] = cy[:, None] + half_h[None, :]
        level_blocks.append(boxes.reshape(-1, 4))
        levels.append(np.full(n * n * n_scales * n_ratios, level, dtype=np.int64))

    all_boxes = np.concatenate(level_blocks, axis=0)
    n_positions = all_boxes.shape[0] // (n_scales * n_ratios)
    return AnchorGrid(
        boxes=all_boxes,
        levels=np.concatenate(levels),
        scale_indices=np.tile(s_idx, n_positions),
        ratio_indices=np.tile(r_idx, n_positions),
        config=config,
    )


@dataclass(frozen=True)
class ImageCoverage:
    file: str
    n_digits: int
    n_matched: int


@dataclass(frozen=True, eq=False)
class CoverageReport:
    """Fraction of ground-truth boxes matched by at least one anchor."""

    per_image: tuple[ImageCoverage, ...]
    best_ious: np.ndarray   # best anchor IoU per GT box, file order
    iou_threshold: float

    @property
    def total_digits(self) -> int:
        return sum(c.n_digits for c in self.per_image)

    @property
    def total_matched(self) -> int:
        return sum(c.n_matched for c in self.per_image)

    @property
    def coverage(self) -> float:
        total = self.total_digits
        return 1.0 if total == 0 else self.total_matched / total


def coverage_report(grid: AnchorGrid, aset: AnnotationSet,
                    iou_threshold: float) -> CoverageReport:
    """Match each GT box (mapped to the model frame) against the whole grid."""
    if not 0.0 <= iou_threshold <= 1.0:
        raise ValidationError(f"iou_threshold must be in [0, 1], got {iou_threshold}")
    per_image = []
    best_all: list[np.ndarray] = []
    for img in sorted(aset.images, key=lambda im: im.file):
        if not img.digits:
            per_image.append(ImageCoverage(img.file, 0, 0))
            continue
        t = letterbox_transform(img.width, img.height, grid.config.input_size)
        gt = boxes_array([d.box for d in img.digits]) * t.scale
        best = pairwise_iou(gt, grid.boxes).max(axis=1)
        best_all.append(best)
        per_image.append(ImageCoverage(img.file, len(img.digits),
                                       int((best >= iou_threshold).sum())))
    best_ious = (np.concatenate(best_all) if best_all
                 else np.zeros(0, dtype=np.float64))
    return CoverageReport(per_image=tuple(per_image), best_ious=best_ious,
                          iou_threshold=iou_threshold)
