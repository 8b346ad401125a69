"""Bridge test fixtures: a tiny constant-output TFLite detection model."""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

os.environ.setdefault("TF_CPP_MIN_LOG_LEVEL", "3")

tf = pytest.importorskip("tensorflow")

INPUT_SIZE = 128

# Constant detections in normalized (ymin, xmin, ymax, xmax) form. The first
# spans exactly the content region of a 200x100 letterboxed image; the last
# lies fully inside the bottom padding of that image.
MODEL_BOXES = [[0.0, 0.0, 0.5, 1.0],
               [0.125, 0.25, 0.25, 0.5],
               [0.6, 0.6, 0.7, 0.7]]
MODEL_CLASSES = [1.0, 7.0, 3.0]
MODEL_SCORES = [0.9, 0.6, 0.3]


class _ConstantDetector(tf.Module):
    def __init__(self):
        super().__init__()
        self._boxes = tf.constant([MODEL_BOXES], tf.float32)
        self._classes = tf.constant([MODEL_CLASSES], tf.float32)
        self._scores = tf.constant([MODEL_SCORES], tf.float32)
        self._count = tf.constant([float(len(MODEL_SCORES))], tf.float32)

    @tf.function(input_signature=[
        tf.TensorSpec([1, INPUT_SIZE, INPUT_SIZE, 3], tf.uint8, name="image")])
    def detect(self, image):
        zero = tf.reduce_mean(tf.cast(image, tf.float32)) * 0.0
        return {
            "detection_boxes": self._boxes + zero,
            "detection_classes": self._classes + zero,
            "detection_scores": self._scores + zero,
            "num_detections": self._count + zero,
        }


@pytest.fixture(scope="session")
def dummy_model(tmp_path_factory) -> Path:
    module = _ConstantDetector()
    converter = tf.lite.TFLiteConverter.from_concrete_functions(
        [module.detect.get_concrete_function()], module)
    blob = converter.convert()
    path = tmp_path_factory.mktemp("model") / "constant_detector.tflite"
    path.write_bytes(blob)
    return path


def write_png(path: Path, width: int, height: int, seed: int = 0) -> None:
    rng = np.random.default_rng(seed)
    arr = rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8)
    Image.fromarray(arr).save(path)


@pytest.fixture()
def image_dir(tmp_path) -> Path:
    folder = tmp_path / "images"
    folder.mkdir()
    write_png(folder / "a.png", 200, 100, seed=1)
    write_png(folder / "b.png", 128, 128, seed=2)
    return folder
