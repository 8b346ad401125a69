"""TFLite detection runner and the detection-file exporter.

The bridge stays deliberately thin: letterbox, invoke, map boxes back, write
the toolkit's detection JSON. It applies no thresholding, NMS or top-k of its
own beyond the optional score floor - post-processing belongs to the toolkit
so it is testable in one place. When the model follows the standard detection
post-process output signature (boxes/classes/scores/count), its suppression
is already baked in and the output records ``bridge_meta.embedded_nms``.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .letterbox import letterbox_image, model_box_to_original

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg"}
N_CLASSES = 10


class BridgeError(Exception):
    """Model or image could not be processed."""


@dataclass(frozen=True)
class BridgeConfig:
    model_path: Path
    images_dir: Path
    out_path: Path
    input_size: int | None = None      # override; else taken from the model
    score_floor: float = 0.0           # keep near-raw scores for the sweep
    class_offset: int = 0              # added to raw class ids (e.g. -1 for 1-based)

    def __post_init__(self) -> None:
        if self.input_size is not None and self.input_size <= 0:
            raise BridgeError(f"input size must be positive, got {self.input_size}")
        if not 0.0 <= self.score_floor <= 1.0:
            raise BridgeError(f"score floor must be in [0, 1], got {self.score_floor}")


@dataclass
class RawDetection:
    box: tuple[float, float, float, float]   # model-frame pixels, xyxy
    label: int
    score: float


def _load_interpreter(model_path: Path):
    try:
        from tensorflow import lite as tflite
    except ImportError as err:
        raise BridgeError(
            "tensorflow is required to run TFLite models "
            "(pip install 'sevseg-bridge[tflite]')") from err
    try:
        interpreter = tflite.Interpreter(model_path=str(model_path))
        interpreter.allocate_tensors()
    except Exception as err:
        raise BridgeError(f"cannot load model {model_path}: {err}") from err
    return interpreter


def _classify_outputs(
        named: dict[str, np.ndarray]) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    """Identify (boxes, classes, scores, valid count) among the model outputs.

    Resolution order: tensor names, then shapes, then value heuristics (scores
    live in [0, 1]; classes are integral). The count tensor marks how many of
    the fixed output slots hold real detections; without one, all slots count.
    """
    arrays = {k.lower(): np.asarray(v, dtype=np.float64) for k, v in named.items()}

    box_keys = [k for k, v in arrays.items() if v.ndim >= 2 and v.shape[-1] == 4]
    if len(box_keys) > 1:
        hinted = [k for k in box_keys if "box" in k or "location" in k]
        box_keys = hinted or sorted(box_keys, key=lambda k: -arrays[k].ndim)[:1]
    if not box_keys:
        raise BridgeError(f"no box tensor among outputs {sorted(named)}")
    boxes = arrays[box_keys[0]].reshape(-1, 4)
    n_slots = boxes.shape[0]

    rest = {k: v.reshape(-1) for k, v in arrays.items() if k != box_keys[0]}
    count = n_slots
    for key in list(rest):
        if "num" in key or "count" in key:
            count = min(n_slots, int(round(float(rest.pop(key)[0]))))
    fields = {k: v for k, v in rest.items() if v.size == n_slots}

    classes = scores = None
    for key in list(fields):
        if "class" in key or "categor" in key:
            classes = fields.pop(key)
        elif "score" in key:
            scores = fields.pop(key)
    leftovers = list(fields.values())
    if classes is None and scores is None and len(leftovers) == 2:
        a, b = leftovers
        a_integral = bool(np.allclose(a, np.round(a)))
        b_integral = bool(np.allclose(b, np.round(b)))
        if a_integral != b_integral:
            classes, scores = (a, b) if a_integral else (b, a)
        elif float(a.max(initial=0.0)) > 1.0:
            classes, scores = a, b
        elif float(b.max(initial=0.0)) > 1.0:
            classes, scores = b, a
        else:
            classes, scores = a, b   # classic postprocess order: classes first
    elif classes is None and len(leftovers) == 1:
        classes = leftovers[0]
    elif scores is None and len(leftovers) == 1:
        scores = leftovers[0]

    if classes is None or scores is None:
        raise BridgeError(f"cannot identify detection outputs among {sorted(named)}")
    return boxes, classes, scores, count


class TfliteDetector:
    """Wraps a TFLite detection model with the standard 4-tensor output."""

    def __init__(self, model_path: Path, input_size: int | None = None):
        self._interpreter = _load_interpreter(model_path)
        signatures = self._interpreter.get_signature_list()
        self._runner = None
        if len(signatures) == 1:
            key = next(iter(signatures))
            self._runner = self._interpreter.get_signature_runner(key)
            self._input_name = signatures[key]["inputs"][0]

        detail = self._interpreter.get_input_details()[0]
        shape = [int(v) for v in detail["shape"]]
        if len(shape) != 4 or shape[0] != 1 or shape[3] != 3:
            raise BridgeError(f"unexpected input tensor shape {shape}")
        if input_size is None and shape[1] != shape[2]:
            raise BridgeError(f"non-square model input {shape}; pass --input-size")
        self.input_size = input_size or shape[1]
        self._input_dtype = detail["dtype"]
        self.embedded_nms = True   # the 4-tensor signature implies built-in NMS

    def infer(self, canvas: np.ndarray) -> list[RawDetection]:
        """Run one letterboxed frame; returns model-frame pixel detections."""
        tensor = canvas[None, ...]
        if self._input_dtype != np.uint8:
            tensor = tensor.astype(self._input_dtype)
        if self._runner is not None:
            outputs = self._runner(**{self._input_name: tensor})
        else:
            detail = self._interpreter.get_input_details()[0]
            self._interpreter.set_tensor(detail["index"], tensor)
            self._interpreter.invoke()
            outputs = {d["name"]: self._interpreter.get_tensor(d["index"])
                       for d in self._interpreter.get_output_details()}
        boxes, classes, scores, count = _classify_outputs(outputs)

        out = []
        for i in range(count):
            ymin, xmin, ymax, xmax = (float(v) for v in boxes[i])
            size = float(self.input_size)
            out.append(RawDetection(
                box=(xmin * size, ymin * size, xmax * size, ymax * size),
                label=int(round(float(classes[i]))),
                score=float(scores[i])))
        return out


def _image_files(images_dir: Path) -> list[Path]:
    if not images_dir.is_dir():
        raise BridgeError(f"not a directory: {images_dir}")
    return sorted(p for p in images_dir.iterdir()
                  if p.suffix.lower() in IMAGE_SUFFIXES)


def export_detections(config: BridgeConfig) -> int:
    """Run the model over the folder and write the detection file.

    Returns the number of per-image failures; failed images are reported on
    stderr and skipped, so a partial export is still schema-valid.
    """
    detector = TfliteDetector(Path(config.model_path), config.input_size)
    files = _image_files(Path(config.images_dir))
    if not files:
        raise BridgeError(f"no images found under {config.images_dir}")

    entries = []
    failures = 0
    for path in files:
        try:
            with Image.open(path) as im:
                width, height = im.width, im.height
                canvas, transform = letterbox_image(im, detector.input_size)
        except Exception as err:
            failures += 1
            print(f"error: {path.name}: {err}", file=sys.stderr)
            continue
        detections = []
        for raw in detector.infer(canvas):
            label = raw.label + config.class_offset
            score = min(max(raw.score, 0.0), 1.0)
            if score < config.score_floor or not 0 <= label < N_CLASSES:
                continue
            box = model_box_to_original(raw.box, transform, width, height)
            if box[2] - box[0] <= 0 or box[3] - box[1] <= 0:
                continue
            detections.append({"class": label, "score": score, "box": list(box)})
        entries.append({"file": path.name, "width": width, "height": height,
                        "detections": detections})

    payload = {
        "schema_version": 1,
        "images": entries,
        "bridge_meta": {"embedded_nms": detector.embedded_nms},
    }
    Path(config.out_path).write_text(json.dumps(payload, indent=2) + "\n",
                                     encoding="utf-8")
    return failures
