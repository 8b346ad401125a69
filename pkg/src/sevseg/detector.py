"""Classical seven-segment detector: binarize, label components, probe, decode.

Segments are named A (top), B (upper right), C (lower right), D (bottom),
E (lower left), F (upper left), G (middle). The decode table is the standard
encoding with tails (6 keeps its top-left F, 9 keeps its top A); any other
activation pattern decodes to nothing.

Probe windows are expressed as fractions of the candidate box::

    segment   x0    x1    y0    y1    kind
    A        0.35  0.65  0.02  0.12   horizontal
    B        0.50  1.00  0.18  0.42   vertical
    C        0.50  1.00  0.58  0.82   vertical
    D        0.35  0.65  0.88  0.98   horizontal
    E        0.00  0.50  0.58  0.82   vertical
    F        0.00  0.50  0.18  0.42   vertical
    G        0.35  0.65  0.45  0.55   horizontal

Horizontal segments take the foreground fraction of the whole window;
vertical segments take the max over three x-sub-windows so a slanted column
still registers. A very narrow box cannot hold horizontal segments at all -
only the digit "1" produces one - so boxes below ``narrow_ratio`` probe B and
C across the full box width and leave the rest off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ValidationError
from .geometry import BoundingBox, Detection

SEGMENT_NAMES = "ABCDEFG"

DIGIT_SEGMENTS = {
    0: "ABCDEF",
    1: "BC",
    2: "ABDEG",
    3: "ABCDG",
    4: "BCFG",
    5: "ACDFG",
    6: "ACDEFG",
    7: "ABC",
    8: "ABCDEFG",
    9: "ABCDFG",
}

_PROBE_WINDOWS = {
    "A": (0.35, 0.65, 0.02, 0.12),
    "B": (0.50, 1.00, 0.18, 0.42),
    "C": (0.50, 1.00, 0.58, 0.82),
    "D": (0.35, 0.65, 0.88, 0.98),
    "E": (0.00, 0.50, 0.58, 0.82),
    "F": (0.00, 0.50, 0.18, 0.42),
    "G": (0.35, 0.65, 0.45, 0.55),
}
_VERTICAL = frozenset("BCEF")
_NARROW_WINDOWS = {"B": (0.0, 1.0, 0.05, 0.45), "C": (0.0, 1.0, 0.55, 0.95)}

# 4-connectivity for component labelling.
_CROSS = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=np.int32)


@dataclass(frozen=True)
class SegmentMask:
    """Activation pattern of the seven segments, A through G."""

    bits: tuple[bool, bool, bool, bool, bool, bool, bool]

    @classmethod
    def from_letters(cls, letters: str) -> "SegmentMask":
        up = set(letters.upper())
        unknown = up - set(SEGMENT_NAMES)
        if unknown:
            raise ValidationError(f"unknown segments {sorted(unknown)}")
        return cls(bits=tuple(name in up for name in SEGMENT_NAMES))

    def to_int(self) -> int:
        """Pack as a 7-bit integer, A = bit 6 down to G = bit 0."""
        value = 0
        for bit in self.bits:
            value = (value << 1) | int(bit)
        return value

    def letters(self) -> str:
        return "".join(n for n, bit in zip(SEGMENT_NAMES, self.bits) if bit)


MASK_TO_DIGIT = {
    SegmentMask.from_letters(seg).to_int(): digit
    for digit, seg in DIGIT_SEGMENTS.items()
}


def decode_mask(mask: SegmentMask) -> int | None:
    """Digit for a known activation pattern, None otherwise."""
    return MASK_TO_DIGIT.get(mask.to_int())


@dataclass(frozen=True)
class DetectorConfig:
    min_area_frac: float = 0.0005        # component pixel count vs image area
    aspect_range: tuple[float, float] = (0.05, 1.5)
    on_threshold: float = 0.5            # probe foreground fraction for ON
    narrow_ratio: float = 0.35           # below this w/h, only B/C can exist

    def __post_init__(self) -> None:
        lo, hi = self.aspect_range
        if not 0 < lo < hi:
            raise ValidationError(f"bad aspect range {self.aspect_range}")
        if not 0.0 < self.on_threshold < 1.0:
            raise ValidationError(f"bad on_threshold {self.on_threshold}")


@dataclass(frozen=True)
class DigitCandidate:
    box: BoundingBox
    mask: SegmentMask
    label: int | None
    score: float


def to_grayscale(img: np.ndarray) -> np.ndarray:
    """Luma conversion (0.299 R + 0.587 G + 0.114 B), float64."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim == 2:
        return arr
    return arr[:, :, 0] * 0.299 + arr[:, :, 1] * 0.587 + arr[:, :, 2] * 0.114


def otsu_threshold(gray: np.ndarray) -> float:
    """Threshold maximizing between-class variance on a 256-bin histogram."""
    levels = np.clip(np.rint(gray), 0, 255).astype(np.uint8)
    hist = np.bincount(levels.reshape(-1), minlength=256).astype(np.float64)
    total = hist.sum()
    if total == 0:
        return 0.0
    p = hist / total
    omega = np.cumsum(p)
    mu = np.cumsum(p * np.arange(256))
    mu_total = mu[-1]
    denom = omega * (1.0 - omega)
    with np.errstate(divide="ignore", invalid="ignore"):
        sigma_b = np.where(denom > 0, (mu_total * omega - mu) ** 2 / denom, 0.0)
    return float(np.argmax(sigma_b))


def binarize(img: np.ndarray) -> np.ndarray:
    """Otsu binarization with lit segments as foreground (True).

    Polarity is auto-detected: foreground must be the minority class among
    the image border pixels, since displays are surrounded by background.
    """
    gray = to_grayscale(img)
    mask = gray > otsu_threshold(gray)
    border = np.concatenate([mask[0, :], mask[-1, :], mask[1:-1, 0], mask[1:-1, -1]])
    if border.size and border.mean() > 0.5:
        mask = ~mask
    return mask


def find_candidates(raster: np.ndarray,
                    config: DetectorConfig = DetectorConfig()) -> list[BoundingBox]:
    """Boxes of 4-connected foreground components passing area/aspect filters."""
    raster = np.asarray(raster, dtype=bool)
    labeled, n = ndimage.label(raster, structure=_CROSS)
    if n == 0:
        return []
    min_area = config.min_area_frac * raster.shape[0] * raster.shape[1]
    areas = ndimage.sum_labels(raster, labeled, index=np.arange(1, n + 1))
    lo, hi = config.aspect_range
    out = []
    for slc, area in zip(ndimage.find_objects(labeled), areas):
        if slc is None or area < min_area:
            continue
        ys, xs = slc
        box = BoundingBox(float(xs.start), float(ys.start),
                          float(xs.stop), float(ys.stop))
        ratio = box.width / box.height
        if lo <= ratio <= hi:
            out.append(box)
    out.sort(key=lambda b: (b.ymin, b.xmin, b.ymax, b.xmax))
    return out


def _window_fraction(raster: np.ndarray, box: BoundingBox,
                     window: tuple[float, float, float, float]) -> float:
    """Foreground fraction of a fractional window, measured by point sampling.

    Sampling on a fine grid inside the window (rather than slicing whole
    pixels) keeps small boxes honest: a strip narrower than two pixels still
    reads near 0 or 1 instead of being diluted by half-covered border pixels.
    """
    fx0, fx1, fy0, fy1 = window
    x0, x1 = box.xmin + fx0 * box.width, box.xmin + fx1 * box.width
    y0, y1 = box.ymin + fy0 * box.height, box.ymin + fy1 * box.height
    nx = max(3, min(15, round(x1 - x0)))
    ny = max(3, min(15, round(y1 - y0)))
    xs = x0 + (np.arange(nx) + 0.5) / nx * (x1 - x0)
    ys = y0 + (np.arange(ny) + 0.5) / ny * (y1 - y0)
    px = np.clip(np.floor(xs).astype(np.int64), 0, raster.shape[1] - 1)
    py = np.clip(np.floor(ys).astype(np.int64), 0, raster.shape[0] - 1)
    return float(raster[np.ix_(py, px)].mean())


def _probe_fraction(raster: np.ndarray, box: BoundingBox, name: str,
                    narrow: bool) -> float:
    if narrow:
        if name not in _NARROW_WINDOWS:
            return 0.0
        window = _NARROW_WINDOWS[name]
    else:
        window = _PROBE_WINDOWS[name]
    if name in _VERTICAL:
        fx0, fx1, fy0, fy1 = window
        third = (fx1 - fx0) / 3.0
        return max(
            _window_fraction(raster, box, (fx0 + i * third, fx0 + (i + 1) * third, fy0, fy1))
            for i in range(3)
        )
    return _window_fraction(raster, box, window)


def probe_and_decode(raster: np.ndarray, box: BoundingBox,
                     config: DetectorConfig = DetectorConfig()) -> DigitCandidate:
    """Sample the seven probe regions and look the pattern up in the table.

    The score is the mean probe decisiveness, |fraction - 0.5| * 2, so a
    clean glyph scores near 1 and an ambiguous blob near 0. Patterns outside
    the table yield no class and score 0.
    """
    raster = np.asarray(raster, dtype=bool)
    if box.width <= 0 or box.height <= 0:
        raise ValidationError(f"cannot probe degenerate box {box.as_tuple()}")
    narrow = (box.width / box.height) < config.narrow_ratio
    fractions = [_probe_fraction(raster, box, name, narrow) for name in SEGMENT_NAMES]
    mask = SegmentMask(bits=tuple(f > config.on_threshold for f in fractions))
    label = decode_mask(mask)
    if label is None:
        return DigitCandidate(box=box, mask=mask, label=None, score=0.0)
    score = float(np.mean([abs(f - 0.5) * 2.0 for f in fractions]))
    return DigitCandidate(box=box, mask=mask, label=label, score=score)


def detect(img: np.ndarray,
           config: DetectorConfig = DetectorConfig()) -> list[Detection]:
    """Full per-image pass; output is raw (pre-NMS), in original-image pixels."""
    raster = binarize(img)
    detections = []
    for box in find_candidates(raster, config):
        cand = probe_and_decode(raster, box, config)
        if cand.label is not None:
            detections.append(Detection(box=cand.box, label=cand.label,
                                        score=cand.score))
    return detections
