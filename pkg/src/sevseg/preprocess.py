"""Letterbox rescaling, pixel normalization and model/original frame mapping.

A square model input is filled by uniformly rescaling the image so its longer
side matches the target, then padding the bottom/right remainder with zeros;
content is never stretched. Padding sits at bottom/right only, so the model
frame and the original frame share their origin and boxes convert by a pure
scale factor. The model-input pipeline is resample -> normalize -> pad, which
keeps padding out of the image statistics and leaves padded pixels at zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from PIL import Image as PILImage

from ._util import round_half_up
from .errors import ValidationError
from .geometry import BoundingBox

# Input tensor side per named architecture.
MODEL_INPUT_SIZES = {
    "efficientdet-d0": 512,
    "efficientdet-d1": 640,
    "efficientdet-d2": 768,
    "efficientdet-lite0": 320,
    "efficientdet-lite1": 384,
    "efficientdet-lite2": 448,
}

NORMALIZE_EPS = 1e-6


@dataclass(frozen=True)
class LetterboxTransform:
    """Maps between original-image and model-frame pixel coordinates."""

    scale: float
    pad_right: int
    pad_bottom: int
    target: int


def input_size_for(model: str) -> int:
    key = model.strip().lower()
    if key not in MODEL_INPUT_SIZES:
        known = ", ".join(sorted(MODEL_INPUT_SIZES))
        raise ValidationError(f"unknown model '{model}' (known: {known})")
    return MODEL_INPUT_SIZES[key]


def letterbox_transform(width: int, height: int, target: int) -> LetterboxTransform:
    """Pure letterbox arithmetic for an image of the given size."""
    if width <= 0 or height <= 0 or target <= 0:
        raise ValidationError(f"invalid letterbox geometry {width}x{height} -> {target}")
    scale = target / max(width, height)
    content_w = min(target, round_half_up(width * scale))
    content_h = min(target, round_half_up(height * scale))
    return LetterboxTransform(scale=scale,
                              pad_right=target - content_w,
                              pad_bottom=target - content_h,
                              target=target)


def content_size(t: LetterboxTransform) -> tuple[int, int]:
    return t.target - t.pad_right, t.target - t.pad_bottom


def bilinear_resize(img: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    """Bilinear resampling with pixel-center alignment; returns float64."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    h, w = arr.shape[:2]
    if out_w <= 0 or out_h <= 0:
        raise ValidationError(f"invalid resize target {out_w}x{out_h}")

    def _coords(n_out: int, n_in: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        src = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5
        src = np.clip(src, 0.0, n_in - 1.0)
        lo = np.floor(src).astype(np.int64)
        hi = np.minimum(lo + 1, n_in - 1)
        return lo, hi, src - lo

    x0, x1, fx = _coords(out_w, w)
    y0, y1, fy = _coords(out_h, h)
    top = arr[y0][:, x0] * (1 - fx)[None, :, None] + arr[y0][:, x1] * fx[None, :, None]
    bot = arr[y1][:, x0] * (1 - fx)[None, :, None] + arr[y1][:, x1] * fx[None, :, None]
    out = top * (1 - fy)[:, None, None] + bot * fy[:, None, None]
    return out if img.ndim == 3 else out[:, :, 0]


def letterbox(img: np.ndarray, target: int) -> tuple[np.ndarray, LetterboxTransform]:
    """Rescale to fit a square target and zero-pad the bottom/right remainder."""
    h, w = img.shape[:2]
    t = letterbox_transform(w, h, target)
    cw, ch = content_size(t)
    content = bilinear_resize(img, cw, ch)
    shape = (target, target) + content.shape[2:]
    out = np.zeros(shape, dtype=np.float64)
    out[:ch, :cw] = content
    return out, t


def normalize(img: np.ndarray) -> np.ndarray:
    """Shift/scale pixels to zero mean and unit variance over all channels.

    Uses the population standard deviation; a constant image maps to all
    zeros via the epsilon guard.
    """
    arr = np.asarray(img, dtype=np.float64)
    mean = arr.mean()
    std = arr.std()
    return (arr - mean) / max(std, NORMALIZE_EPS)


def prepare_model_input(img: np.ndarray, target: int) -> tuple[np.ndarray, LetterboxTransform]:
    """Full model-input pipeline: resample, normalize content, zero-pad."""
    h, w = img.shape[:2]
    t = letterbox_transform(w, h, target)
    cw, ch = content_size(t)
    content = normalize(bilinear_resize(img, cw, ch))
    shape = (target, target) + content.shape[2:]
    out = np.zeros(shape, dtype=np.float64)
    out[:ch, :cw] = content
    return out, t


def to_model_frame(box: BoundingBox, t: LetterboxTransform) -> BoundingBox:
    return box.scaled(t.scale)


def to_original_frame(box: BoundingBox, t: LetterboxTransform) -> BoundingBox:
    return box.scaled(1.0 / t.scale)


def load_image(path) -> np.ndarray:
    """Read a PNG/JPEG file as an (H, W, 3) uint8 RGB array."""
    with PILImage.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def save_image(img: np.ndarray, path) -> None:
    arr = np.asarray(img)
    if arr.dtype != np.uint8:
        arr = np.clip(np.rint(arr), 0, 255).astype(np.uint8)
    PILImage.fromarray(arr).save(path)
