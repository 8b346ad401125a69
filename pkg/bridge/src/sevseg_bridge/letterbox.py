"""Letterbox arithmetic matching the evaluation toolkit's convention.

The toolkit rescales so the longer side hits the square target, rounds the
content size half-up, and pads bottom/right with zeros; boxes convert between
frames by the scale factor alone. This module re-implements that contract
(the bridge talks to the toolkit only through files) and is pinned to it by
the golden vectors under ``golden/letterbox_vectors.json``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from PIL import Image


@dataclass(frozen=True)
class Transform:
    scale: float
    content_w: int
    content_h: int
    target: int

    @property
    def pad_right(self) -> int:
        return self.target - self.content_w

    @property
    def pad_bottom(self) -> int:
        return self.target - self.content_h


def transform_for(width: int, height: int, target: int) -> Transform:
    if width <= 0 or height <= 0 or target <= 0:
        raise ValueError(f"invalid letterbox geometry {width}x{height} -> {target}")
    scale = target / max(width, height)
    content_w = min(target, math.floor(width * scale + 0.5))
    content_h = min(target, math.floor(height * scale + 0.5))
    return Transform(scale=scale, content_w=content_w, content_h=content_h,
                     target=target)


def letterbox_image(img: Image.Image, target: int) -> tuple[np.ndarray, Transform]:
    """Resize into the top-left corner of a zero-filled square canvas."""
    t = transform_for(img.width, img.height, target)
    content = img.convert("RGB").resize((t.content_w, t.content_h), Image.BILINEAR)
    canvas = np.zeros((target, target, 3), dtype=np.uint8)
    canvas[: t.content_h, : t.content_w] = np.asarray(content, dtype=np.uint8)
    return canvas, t


def model_box_to_original(box, t: Transform, width: int, height: int):
    """Map model-frame pixel corners back to clipped original-image pixels."""
    x0, y0, x1, y1 = (v / t.scale for v in box)
    x0, x1 = sorted((min(max(x0, 0.0), width), min(max(x1, 0.0), width)))
    y0, y1 = sorted((min(max(y0, 0.0), height), min(max(y1, 0.0), height)))
    return (x0, y0, x1, y1)
