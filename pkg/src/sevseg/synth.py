"""Seeded synthetic seven-segment scenes with pixel-exact ground truth.

Digits are drawn as overlapping segment rectangles (joints always overlap, so
every digit rasterizes to a single 4-connected component). An optional slant
shears the glyph about its baseline, imitating the italic lean of real
displays. Noise and brightness are applied after geometry, so ground-truth
boxes stay exact. All randomness comes from per-item derived seeds: the same
seed always produces byte-identical scenes, in any order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from ._util import derived_rng, round_half_up, stable_hash64
from .data import AnnotatedImage, AnnotationSet, GroundTruthDigit, save_annotations
from .detector import DIGIT_SEGMENTS
from .errors import LayoutError, ValidationError
from .geometry import BoundingBox

CELL_ASPECT = 0.55          # glyph cell width as a fraction of digit height
GAP_FRAC = 0.45             # horizontal gap between digits, fraction of cell width
ROW_GAP_FRAC = 0.6          # vertical gap between rows, fraction of digit height
MAX_TOTAL_DIGITS = 7        # no supported device shows more at once
MAX_SLANT_DEG = 8.0

_POLARITIES = ("light-on-dark", "dark-on-light")
# (background, segment) intensities per polarity.
_INTENSITIES = {"light-on-dark": (25.0, 235.0), "dark-on-light": (205.0, 40.0)}


@dataclass(frozen=True)
class SynthSpec:
    rows: tuple[str, ...]
    digit_height: int = 32
    thickness_frac: float = 0.12
    slant_deg: float = 0.0
    polarity: str = "light-on-dark"
    noise_sigma: float = 0.0
    brightness: float = 0.0
    width: int = 320
    height: int = 240
    seed: int = 0

    def __post_init__(self) -> None:
        if not 1 <= len(self.rows) <= 3:
            raise ValidationError(f"need 1..3 rows, got {len(self.rows)}")
        total = sum(len(r) for r in self.rows)
        if not 1 <= total <= MAX_TOTAL_DIGITS:
            raise ValidationError(f"total digits must be 1..{MAX_TOTAL_DIGITS}, got {total}")
        for row in self.rows:
            if not row or not all(ch.isdigit() for ch in row):
                raise ValidationError(f"row {row!r} is not a non-empty digit string")
        if self.digit_height < 12:
            raise ValidationError(f"digit_height too small: {self.digit_height}")
        if not 0.05 <= self.thickness_frac <= 0.25:
            raise ValidationError(f"thickness_frac out of range: {self.thickness_frac}")
        if abs(self.slant_deg) > MAX_SLANT_DEG:
            raise ValidationError(f"|slant| must be <= {MAX_SLANT_DEG}, got {self.slant_deg}")
        if self.polarity not in _POLARITIES:
            raise ValidationError(f"polarity must be one of {_POLARITIES}")
        if self.noise_sigma < 0:
            raise ValidationError(f"noise_sigma must be >= 0, got {self.noise_sigma}")


def _segment_rects(cell_w: float, h: float, t: float) -> dict[str, tuple]:
    """Segment rectangles (u0, v0, u1, v1) in unsheared glyph coordinates."""
    mid0, mid1 = (h - t) / 2.0, (h + t) / 2.0
    return {
        "A": (0.0, 0.0, cell_w, t),
        "B": (cell_w - t, 0.0, cell_w, mid1),
        "C": (cell_w - t, mid0, cell_w, h),
        "D": (0.0, h - t, cell_w, h),
        "E": (0.0, mid0, t, h),
        "F": (0.0, 0.0, t, mid1),
        "G": (0.0, mid0, cell_w, mid1),
    }


def _glyph_mask(digit: int, cell_w: int, h: int, t: float,
                tan_slant: float, shear_w: int) -> np.ndarray:
    """Rasterize one digit into a (h, cell_w + shear_w) boolean mask.

    A pixel is lit when its center falls inside any lit segment rectangle
    after undoing the shear. The shear is anchored so the glyph stays inside
    the widened cell for either lean direction.
    """
    rects = [_segment_rects(float(cell_w), float(h), t)[name]
             for name in DIGIT_SEGMENTS[digit]]
    width = cell_w + shear_w
    v = np.arange(h, dtype=np.float64) + 0.5
    u_raw = np.arange(width, dtype=np.float64) + 0.5
    shift = tan_slant * (h - v) - min(0.0, tan_slant * h)
    u = u_raw[None, :] - shift[:, None]
    vv = np.broadcast_to(v[:, None], u.shape)
    mask = np.zeros(u.shape, dtype=bool)
    for u0, v0, u1, v1 in rects:
        mask |= (u >= u0) & (u < u1) & (vv >= v0) & (vv < v1)
    return mask


def render_components(spec: SynthSpec) -> tuple[np.ndarray, list[BoundingBox], list[int]]:
    """Lit-pixel mask of the whole scene plus per-digit tight boxes and labels."""
    h = spec.digit_height
    t = spec.thickness_frac * h
    cell_w = max(3, round_half_up(CELL_ASPECT * h))
    tan_slant = math.tan(math.radians(spec.slant_deg))
    shear_w = int(math.ceil(abs(tan_slant) * h))
    full_w = cell_w + shear_w
    gap = max(2, round_half_up(GAP_FRAC * cell_w))
    row_gap = max(2, round_half_up(ROW_GAP_FRAC * h))
    margin = max(4, round_half_up(0.4 * h))

    widest = max(len(r) for r in spec.rows)
    need_w = 2 * margin + widest * full_w + (widest - 1) * gap
    need_h = 2 * margin + len(spec.rows) * h + (len(spec.rows) - 1) * row_gap
    if need_w > spec.width or need_h > spec.height:
        raise LayoutError(
            f"scene needs {need_w}x{need_h} but image is {spec.width}x{spec.height}")

    scene = np.zeros((spec.height, spec.width), dtype=bool)
    boxes: list[BoundingBox] = []
    labels: list[int] = []
    for r, row in enumerate(spec.rows):
        y0 = margin + r * (h + row_gap)
        for k, ch in enumerate(row):
            x0 = margin + k * (full_w + gap)
            glyph = _glyph_mask(int(ch), cell_w, h, t, tan_slant, shear_w)
            ys, xs = np.nonzero(glyph)
            boxes.append(BoundingBox(
                float(x0 + xs.min()), float(y0 + ys.min()),
                float(x0 + xs.max() + 1), float(y0 + ys.max() + 1)))
            labels.append(int(ch))
            scene[y0:y0 + h, x0:x0 + full_w] |= glyph
    return scene, boxes, labels


def render(spec: SynthSpec, file: str = "synthetic.png",
           device: str = "synthetic") -> tuple[np.ndarray, AnnotatedImage]:
    """Render the scene to an (H, W, 3) uint8 image with exact annotations."""
    scene, boxes, labels = render_components(spec)
    background, segment = _INTENSITIES[spec.polarity]
    img = np.where(scene, segment, background).astype(np.float64)
    img += spec.brightness
    if spec.noise_sigma > 0:
        rng = np.random.default_rng(spec.seed)
        img += rng.normal(0.0, spec.noise_sigma, size=img.shape)
    img = np.clip(np.rint(img), 0, 255).astype(np.uint8)
    img = np.repeat(img[:, :, None], 3, axis=2)

    ann = AnnotatedImage(
        file=file, width=spec.width, height=spec.height, device=device,
        digits=tuple(GroundTruthDigit(box=b, label=c) for b, c in zip(boxes, labels)))
    return img, ann


def expected_values(spec: SynthSpec) -> list[int]:
    """The numeric reading the scene encodes, top row first."""
    return [int(row) for row in spec.rows]


@dataclass(frozen=True)
class CorpusSpec:
    """Distribution a generated corpus draws its scenes from."""

    digit_weights: tuple[float, ...] = (1.0,) * 10
    rows_range: tuple[int, int] = (1, 3)
    row_len_range: tuple[int, int] = (1, 3)
    digit_height_range: tuple[int, int] = (24, 40)
    slant_range: tuple[float, float] = (0.0, 0.0)
    noise_sigma: float = 0.0
    polarity: str = "mixed"
    brightness_range: tuple[float, float] = (0.0, 0.0)
    width: int = 320
    height: int = 240
    n_devices: int = 4

    def __post_init__(self) -> None:
        if len(self.digit_weights) != 10 or any(w < 0 for w in self.digit_weights):
            raise ValidationError("digit_weights must be 10 non-negative values")
        if sum(self.digit_weights) <= 0:
            raise ValidationError("digit_weights must not all be zero")
        if self.polarity not in _POLARITIES + ("mixed",):
            raise ValidationError(f"polarity must be 'mixed' or one of {_POLARITIES}")
        if self.n_devices < 1:
            raise ValidationError("n_devices must be >= 1")


def corpus_specs(n: int, cspec: CorpusSpec, seed: int) -> list[tuple[str, str, SynthSpec]]:
    """Deterministic (file, device, scene spec) triples for a corpus of n scenes."""
    if n < 1:
        raise ValidationError(f"corpus size must be >= 1, got {n}")
    items = []
    for i in range(n):
        rng = derived_rng(seed, "scene", i)
        n_rows = rng.randint(*cspec.rows_range)
        budget = MAX_TOTAL_DIGITS
        rows = []
        for r in range(n_rows):
            remaining_rows = n_rows - r - 1
            max_len = min(cspec.row_len_range[1], budget - remaining_rows)
            length = rng.randint(min(cspec.row_len_range[0], max_len), max_len)
            rows.append("".join(str(d) for d in rng.choices(
                range(10), weights=cspec.digit_weights, k=length)))
            budget -= length
        polarity = (rng.choice(_POLARITIES) if cspec.polarity == "mixed"
                    else cspec.polarity)
        spec = SynthSpec(
            rows=tuple(rows),
            digit_height=rng.randint(*cspec.digit_height_range),
            slant_deg=rng.uniform(*cspec.slant_range),
            polarity=polarity,
            noise_sigma=cspec.noise_sigma,
            brightness=rng.uniform(*cspec.brightness_range),
            width=cspec.width,
            height=cspec.height,
            seed=stable_hash64(seed, "noise", i),
        )
        device = f"device{rng.randrange(cspec.n_devices) + 1}"
        items.append((f"img_{i:04d}.png", device, spec))
    return items


def generate_corpus(n: int, cspec: CorpusSpec, seed: int, out_dir) -> AnnotationSet:
    """Write n scenes as PNGs plus annotations.json and a class histogram CSV."""
    from .data import class_histogram
    from .preprocess import save_image

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    images = []
    for file, device, spec in corpus_specs(n, cspec, seed):
        img, ann = render(spec, file=file, device=device)
        save_image(img, out_dir / file)
        images.append(replace(ann, file=file, device=device))
    aset = AnnotationSet(images=tuple(images))
    save_annotations(aset, out_dir / "annotations.json")
    counts = class_histogram(aset)
    lines = ["class,count"] + [f"{c},{counts[c]}" for c in range(10)]
    (out_dir / "class_histogram.csv").write_text("\n".join(lines) + "\n",
                                                 encoding="utf-8")
    return aset
