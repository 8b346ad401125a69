"""Shared fixtures: plain-instance builders and randomized scene generation."""

from __future__ import annotations

import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from sevseg.data import (AnnotatedImage, AnnotationSet, DetectionImage, DetectionSet,
                         GroundTruthDigit)
from sevseg.geometry import BoundingBox, Detection

CANVAS = 200  # instance images are CANVAS x CANVAS


def make_annotation_set(images) -> AnnotationSet:
    """Build an AnnotationSet from plain (file, gts, dets) instances."""
    out = []
    for file, gts, _dets in images:
        digits = tuple(GroundTruthDigit(box=BoundingBox(*box), label=label)
                       for box, label in gts)
        out.append(AnnotatedImage(file=file, width=CANVAS, height=CANVAS,
                                  device="dev1", digits=digits))
    return AnnotationSet(images=tuple(out))


def make_detection_set(images) -> DetectionSet:
    out = []
    for file, _gts, dets in images:
        detections = tuple(Detection(box=BoundingBox(*box), label=label, score=score)
                           for box, label, score in dets)
        out.append(DetectionImage(file=file, width=CANVAS, height=CANVAS,
                                  detections=detections))
    return DetectionSet(images=tuple(out))


def random_box(rng: random.Random) -> tuple[float, float, float, float]:
    x0 = float(rng.randrange(0, 50))
    y0 = float(rng.randrange(0, 50))
    return (x0, y0, x0 + rng.randint(2, 14), y0 + rng.randint(2, 14))


def random_instance(rng: random.Random, max_images: int = 5, max_gt: int = 6,
                    max_dets: int = 8):
    """One randomized evaluation scene with integer geometry and tied scores."""
    images = []
    for i in range(rng.randint(1, max_images)):
        gts = [(random_box(rng), rng.randrange(10))
               for _ in range(rng.randint(0, max_gt))]
        dets = []
        for _ in range(rng.randint(0, max_dets)):
            if gts and rng.random() < 0.7:
                (x0, y0, x1, y1), label = gts[rng.randrange(len(gts))]
                dx, dy = rng.randint(-3, 3), rng.randint(-3, 3)
                dw, dh = rng.randint(-2, 2), rng.randint(-2, 2)
                box = (x0 + dx, y0 + dy,
                       max(x0 + dx + 1.0, x1 + dx + dw),
                       max(y0 + dy + 1.0, y1 + dy + dh))
                if rng.random() < 0.25:
                    label = rng.randrange(10)
            else:
                box, label = random_box(rng), rng.randrange(10)
            # coarse scores force tie-break paths through the ranking rules
            dets.append((box, label, rng.randrange(0, 11) / 10))
        images.append((f"img{i}.png", gts, dets))
    return images


def gt_as_detections(images, score: float = 1.0):
    """Replay ground truth as detections (the perfect detector)."""
    return [(file, gts, [(box, label, score) for box, label in gts])
            for file, gts, _dets in images]
