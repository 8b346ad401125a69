"""Seeded training-style augmentations: box jitter, contrast, brightness, JPEG.

Every augmented copy draws its parameters from a per-item RNG seeded by
``hash(spec.seed, file, copy_index)``, so corpora are byte-identical across
runs and independent of processing order. The ``lite`` preset enables box
jitter only; ``full`` enables all four transforms.
"""

from __future__ import annotations

import io
import random
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from ._util import derived_rng
from .data import AnnotatedImage, AnnotationSet, GroundTruthDigit
from .errors import AugmentError, ValidationError
from .geometry import BoundingBox, clip

_JITTER_ATTEMPTS = 32


@dataclass(frozen=True)
class AugmentSpec:
    """Parameter ranges for one augmentation pass; None disables a transform."""

    jitter_frac: float = 0.05
    contrast_range: tuple[float, float] | None = (0.8, 1.25)
    brightness_frac: float = 0.20
    jpeg_quality_range: tuple[int, int] | None = (80, 100)
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.jitter_frac < 0.5:
            raise ValidationError(f"jitter_frac must be in [0, 0.5), got {self.jitter_frac}")
        if self.contrast_range is not None:
            lo, hi = self.contrast_range
            if not 0.0 < lo <= hi:
                raise ValidationError(f"bad contrast range {self.contrast_range}")
        if not 0.0 <= self.brightness_frac <= 1.0:
            raise ValidationError(f"brightness_frac must be in [0, 1], got {self.brightness_frac}")
        if self.jpeg_quality_range is not None:
            lo, hi = self.jpeg_quality_range
            if not (1 <= lo <= hi <= 100):
                raise ValidationError(f"bad JPEG quality range {self.jpeg_quality_range}")

    @classmethod
    def full(cls, seed: int = 0) -> "AugmentSpec":
        return cls(seed=seed)

    @classmethod
    def lite(cls, seed: int = 0) -> "AugmentSpec":
        """Box jitter only, matching the reduced mobile-training options."""
        return cls(contrast_range=None, brightness_frac=0.0,
                   jpeg_quality_range=None, seed=seed)


def jitter_boxes(image: AnnotatedImage, spec: AugmentSpec,
                 rng: random.Random) -> AnnotatedImage:
    """Offset each box corner by uniform(-f, +f) of the box size, then clip.

    Offsets that would invert a box (or clip it to zero area) are re-drawn;
    after a bounded number of attempts the original box is kept.
    """
    f = spec.jitter_frac
    digits = []
    for d in image.digits:
        b = d.box
        chosen = b
        for _ in range(_JITTER_ATTEMPTS):
            w, h = b.width, b.height
            cand = (b.xmin + rng.uniform(-f, f) * w,
                    b.ymin + rng.uniform(-f, f) * h,
                    b.xmax + rng.uniform(-f, f) * w,
                    b.ymax + rng.uniform(-f, f) * h)
            if cand[0] >= cand[2] or cand[1] >= cand[3]:
                continue
            clipped = clip(BoundingBox(*cand), image.width, image.height)
            if clipped.area > 0.0:
                chosen = clipped
                break
        digits.append(GroundTruthDigit(box=chosen, label=d.label))
    return replace(image, digits=tuple(digits))


def adjust_contrast(img: np.ndarray, factor: float) -> np.ndarray:
    """Scale pixel deviations from the image mean; output clamped to [0, 255]."""
    if factor <= 0:
        raise ValidationError(f"contrast factor must be positive, got {factor}")
    arr = np.asarray(img, dtype=np.float64)
    if factor == 1.0:
        return arr
    mean = arr.mean()
    return np.clip((arr - mean) * factor + mean, 0.0, 255.0)


def adjust_brightness(img: np.ndarray, delta_frac: float) -> np.ndarray:
    """Add delta_frac of the full 8-bit range; output clamped to [0, 255]."""
    if not -1.0 <= delta_frac <= 1.0:
        raise ValidationError(f"brightness delta must be in [-1, 1], got {delta_frac}")
    arr = np.asarray(img, dtype=np.float64)
    if delta_frac == 0.0:
        return arr
    return np.clip(arr + delta_frac * 255.0, 0.0, 255.0)


def jpeg_degrade(img: np.ndarray, quality: int) -> np.ndarray:
    """Round-trip the image through the JPEG codec at the given quality."""
    if not 1 <= quality <= 100:
        raise ValidationError(f"JPEG quality must be in [1, 100], got {quality}")
    arr = np.asarray(img)
    if arr.dtype != np.uint8:
        arr = np.clip(np.rint(arr), 0, 255).astype(np.uint8)
    try:
        buf = io.BytesIO()
        PILImage.fromarray(arr).save(buf, format="JPEG", quality=quality)
        buf.seek(0)
        with PILImage.open(buf) as decoded:
            out = np.asarray(decoded.convert("RGB"), dtype=np.uint8)
    except Exception as err:
        raise AugmentError(f"JPEG round trip failed at quality {quality}: {err}") from err
    if out.shape != arr.shape:
        raise AugmentError(f"JPEG round trip changed shape {arr.shape} -> {out.shape}")
    return out


def augment_image(img: np.ndarray, ann: AnnotatedImage, spec: AugmentSpec,
                  rng: random.Random) -> tuple[np.ndarray, AnnotatedImage]:
    """Apply one draw of the enabled transforms. Draw order is fixed:
    contrast, brightness, JPEG quality, then per-box jitter offsets."""
    out = np.asarray(img, dtype=np.float64)
    if spec.contrast_range is not None:
        out = adjust_contrast(out, rng.uniform(*spec.contrast_range))
    if spec.brightness_frac > 0.0:
        out = adjust_brightness(out, rng.uniform(-spec.brightness_frac, spec.brightness_frac))
    arr8 = np.clip(np.rint(out), 0, 255).astype(np.uint8)
    if spec.jpeg_quality_range is not None:
        arr8 = jpeg_degrade(arr8, rng.randint(*spec.jpeg_quality_range))
    return arr8, jitter_boxes(ann, spec, rng)


def augment_dataset(aset: AnnotationSet, spec: AugmentSpec, copies: int,
                    images_dir, out_dir) -> AnnotationSet:
    """Write ``copies`` augmented variants of every image plus new annotations.

    Originals are never touched; augmented files are named
    ``<stem>__aug<k>.png``. Returns the annotation set of the new images only.
    """
    if copies < 1:
        raise ValidationError(f"copies must be >= 1, got {copies}")
    from .preprocess import load_image, save_image

    images_dir = Path(images_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    augmented: list[AnnotatedImage] = []
    for ann in aset.images:
        img = load_image(images_dir / ann.file)
        for k in range(copies):
            rng = derived_rng(spec.seed, ann.file, k)
            new_img, new_ann = augment_image(img, ann, spec, rng)
            new_file = f"{Path(ann.file).stem}__aug{k:03d}.png"
            save_image(new_img, out_dir / new_file)
            augmented.append(replace(new_ann, file=new_file))
    return AnnotationSet(images=tuple(augmented))
