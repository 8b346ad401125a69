"""Annotation and detection file I/O, COCO import, per-device splits, statistics.

Native schemas are versioned JSON. The annotation layout is::

    {"schema_version": 1,
     "images": [{"file": "a.png", "width": W, "height": H, "device": "deviceA",
                 "digits": [{"class": 7, "box": [xmin, ymin, xmax, ymax]}]}]}

Detection files use the same envelope with a ``detections`` list of
``{"class": c, "score": s, "box": [...]}`` entries. Boxes are original-image
pixels, floats. Unknown keys are tolerated on read so sidecar metadata (for
example an inference bridge noting embedded NMS) never breaks the loader.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

from ._util import derived_rng, fisher_yates, round_half_up
from .errors import SchemaError, ValidationError
from .geometry import N_CLASSES, BoundingBox, Detection, aspect_ratio

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class GroundTruthDigit:
    """An annotated digit: its box (positive area) and class."""

    box: BoundingBox
    label: int

    def __post_init__(self) -> None:
        if not isinstance(self.label, int) or not 0 <= self.label < N_CLASSES:
            raise ValidationError(f"digit class out of range: {self.label!r}")
        if self.box.area <= 0.0:
            raise ValidationError(f"ground-truth box {self.box.as_tuple()} has no area")


@dataclass(frozen=True)
class AnnotatedImage:
    file: str
    width: int
    height: int
    device: str
    digits: tuple[GroundTruthDigit, ...]

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ValidationError(f"image '{self.file}': non-positive size "
                                  f"{self.width}x{self.height}")
        for d in self.digits:
            b = d.box
            if b.xmin < 0 or b.ymin < 0 or b.xmax > self.width or b.ymax > self.height:
                raise ValidationError(
                    f"image '{self.file}': box {b.as_tuple()} outside "
                    f"{self.width}x{self.height}")


@dataclass(frozen=True)
class AnnotationSet:
    images: tuple[AnnotatedImage, ...]
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self) -> None:
        _check_unique_files(img.file for img in self.images)

    def total_digits(self) -> int:
        return sum(len(img.digits) for img in self.images)


@dataclass(frozen=True)
class DetectionImage:
    file: str
    width: int
    height: int
    detections: tuple[Detection, ...]

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ValidationError(f"image '{self.file}': non-positive size "
                                  f"{self.width}x{self.height}")


@dataclass(frozen=True)
class DetectionSet:
    images: tuple[DetectionImage, ...]
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self) -> None:
        _check_unique_files(img.file for img in self.images)


@dataclass(frozen=True)
class SplitResult:
    """Outcome of a per-device train/test partition."""

    train: AnnotationSet
    test: AnnotationSet
    seed: int


def _check_unique_files(files) -> None:
    seen: set[str] = set()
    for f in files:
        if f in seen:
            raise ValidationError(f"duplicate file name '{f}' in set")
        seen.add(f)


# ---------------------------------------------------------------------------
# JSON schema parsing

def _expect(obj: dict, key: str, ctx: str):
    if key not in obj:
        raise SchemaError(f"{ctx}: missing field '{key}'")
    return obj[key]


def _expect_int(obj: dict, key: str, ctx: str) -> int:
    v = _expect(obj, key, ctx)
    if isinstance(v, bool) or not isinstance(v, int):
        raise SchemaError(f"{ctx}: field '{key}' must be an integer, got {v!r}")
    return v


def _expect_str(obj: dict, key: str, ctx: str) -> str:
    v = _expect(obj, key, ctx)
    if not isinstance(v, str):
        raise SchemaError(f"{ctx}: field '{key}' must be a string, got {v!r}")
    return v


def _expect_list(obj: dict, key: str, ctx: str) -> list:
    v = _expect(obj, key, ctx)
    if not isinstance(v, list):
        raise SchemaError(f"{ctx}: field '{key}' must be a list")
    return v


def _parse_box(raw, ctx: str) -> BoundingBox:
    if (not isinstance(raw, list) or len(raw) != 4
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in raw)):
        raise SchemaError(f"{ctx}: 'box' must be [xmin, ymin, xmax, ymax], got {raw!r}")
    try:
        return BoundingBox(*(float(v) for v in raw))
    except ValidationError as err:
        raise ValidationError(f"{ctx}: {err}") from err


def _parse_class(obj: dict, ctx: str) -> int:
    c = _expect_int(obj, "class", ctx)
    if not 0 <= c < N_CLASSES:
        raise ValidationError(f"{ctx}: class {c} outside 0..{N_CLASSES - 1}")
    return c


def _load_envelope(path) -> list:
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        raise SchemaError(f"{path}: not valid JSON ({err})") from err
    if not isinstance(payload, dict):
        raise SchemaError(f"{path}: top level must be an object")
    version = _expect_int(payload, "schema_version", str(path))
    if version != SCHEMA_VERSION:
        raise SchemaError(f"{path}: unsupported schema_version {version}")
    return _expect_list(payload, "images", str(path))


def load_annotations(path) -> AnnotationSet:
    """Load and fully validate a native annotation file."""
    images = []
    for i, raw in enumerate(_load_envelope(path)):
        if not isinstance(raw, dict):
            raise SchemaError(f"{path}: images[{i}] must be an object")
        ctx = f"{path}: images[{i}]"
        file = _expect_str(raw, "file", ctx)
        ctx = f"{path}: image '{file}'"
        digits = []
        for j, d in enumerate(_expect_list(raw, "digits", ctx)):
            if not isinstance(d, dict):
                raise SchemaError(f"{ctx}: digits[{j}] must be an object")
            dctx = f"{ctx}: digits[{j}]"
            digits.append(GroundTruthDigit(box=_parse_box(_expect(d, "box", dctx), dctx),
                                           label=_parse_class(d, dctx)))
        try:
            images.append(AnnotatedImage(
                file=file,
                width=_expect_int(raw, "width", ctx),
                height=_expect_int(raw, "height", ctx),
                device=_expect_str(raw, "device", ctx),
                digits=tuple(digits),
            ))
        except ValidationError as err:
            raise ValidationError(f"{ctx}: {err}") from err
    return AnnotationSet(images=tuple(images))


def save_annotations(aset: AnnotationSet, path) -> None:
    payload = {
        "schema_version": aset.schema_version,
        "images": [
            {
                "file": img.file,
                "width": img.width,
                "height": img.height,
                "device": img.device,
                "digits": [
                    {"class": d.label, "box": list(d.box.as_tuple())}
                    for d in img.digits
                ],
            }
            for img in aset.images
        ],
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def load_detections(path) -> DetectionSet:
    """Load and fully validate a native detection file."""
    images = []
    for i, raw in enumerate(_load_envelope(path)):
        if not isinstance(raw, dict):
            raise SchemaError(f"{path}: images[{i}] must be an object")
        ctx = f"{path}: images[{i}]"
        file = _expect_str(raw, "file", ctx)
        ctx = f"{path}: image '{file}'"
        dets = []
        for j, d in enumerate(_expect_list(raw, "detections", ctx)):
            if not isinstance(d, dict):
                raise SchemaError(f"{ctx}: detections[{j}] must be an object")
            dctx = f"{ctx}: detections[{j}]"
            score = _expect(d, "score", dctx)
            if isinstance(score, bool) or not isinstance(score, (int, float)):
                raise SchemaError(f"{dctx}: 'score' must be a number, got {score!r}")
            try:
                dets.append(Detection(box=_parse_box(_expect(d, "box", dctx), dctx),
                                      label=_parse_class(d, dctx),
                                      score=float(score)))
            except ValidationError as err:
                raise ValidationError(f"{dctx}: {err}") from err
        images.append(DetectionImage(
            file=file,
            width=_expect_int(raw, "width", ctx),
            height=_expect_int(raw, "height", ctx),
            detections=tuple(dets),
        ))
    return DetectionSet(images=tuple(images))


def save_detections(dset: DetectionSet, path, extra: dict | None = None) -> None:
    payload: dict = {
        "schema_version": dset.schema_version,
        "images": [
            {
                "file": img.file,
                "width": img.width,
                "height": img.height,
                "detections": [
                    {"class": d.label, "score": d.score, "box": list(d.box.as_tuple())}
                    for d in img.detections
                ],
            }
            for img in dset.images
        ],
    }
    if extra:
        payload.update(extra)
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# COCO import

def import_coco(path) -> AnnotationSet:
    """Import a COCO-style annotation file (images/annotations/categories).

    Category ids map to digits via the category name when it parses as a digit
    in 0..9, falling back to the raw id when it is already in that range.
    COCO ``[x, y, width, height]`` boxes become corners; boxes are clipped to
    the image bounds so the imported set satisfies all annotation invariants.
    Images without annotations are kept with empty digit lists. The device id
    is taken from a per-image ``device`` key when present, else "unknown".
    """
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        raise SchemaError(f"{path}: not valid JSON ({err})") from err
    if not isinstance(payload, dict):
        raise SchemaError(f"{path}: top level must be an object")

    cat_to_digit: dict[int, int] = {}
    for cat in payload.get("categories", []):
        cid = _expect_int(cat, "id", f"{path}: category")
        name = cat.get("name")
        if isinstance(name, str) and name.strip().isdigit() and 0 <= int(name.strip()) < N_CLASSES:
            cat_to_digit[cid] = int(name.strip())
        elif 0 <= cid < N_CLASSES:
            cat_to_digit[cid] = cid
        else:
            raise SchemaError(
                f"{path}: category id={cid} name={name!r} does not map to a digit 0..9")

    entries: dict[int, dict] = {}
    for img in _expect_list(payload, "images", str(path)):
        ctx = f"{path}: image"
        image_id = _expect_int(img, "id", ctx)
        entries[image_id] = {
            "file": _expect_str(img, "file_name", ctx),
            "width": _expect_int(img, "width", ctx),
            "height": _expect_int(img, "height", ctx),
            "device": img.get("device", "unknown"),
            "digits": [],
        }

    for ann in payload.get("annotations", []):
        ctx = f"{path}: annotation id={ann.get('id')}"
        image_id = _expect_int(ann, "image_id", ctx)
        if image_id not in entries:
            raise SchemaError(f"{ctx}: unknown image_id {image_id}")
        cid = _expect_int(ann, "category_id", ctx)
        if cid not in cat_to_digit:
            raise SchemaError(f"{ctx}: category id {cid} has no digit mapping")
        bbox = _expect(ann, "bbox", ctx)
        if not isinstance(bbox, list) or len(bbox) != 4:
            raise SchemaError(f"{ctx}: 'bbox' must be [x, y, width, height]")
        x, y, w, h = (float(v) for v in bbox)
        entry = entries[image_id]
        box = BoundingBox(
            min(max(x, 0.0), entry["width"]),
            min(max(y, 0.0), entry["height"]),
            min(max(x + w, 0.0), entry["width"]),
            min(max(y + h, 0.0), entry["height"]),
        )
        try:
            entry["digits"].append(GroundTruthDigit(box=box, label=cat_to_digit[cid]))
        except ValidationError as err:
            raise ValidationError(f"{ctx}: {err}") from err

    images = [
        AnnotatedImage(file=e["file"], width=e["width"], height=e["height"],
                       device=e["device"], digits=tuple(e["digits"]))
        for _, e in sorted(entries.items())
    ]
    return AnnotationSet(images=tuple(images))


# ---------------------------------------------------------------------------
# Per-device split

def split(aset: AnnotationSet, train_frac: float, seed: int) -> SplitResult:
    """Partition into train/test, shuffling each device subset separately.

    For each device, the images (in file-name order) are shuffled with a
    Fisher-Yates pass driven by a deterministic 64-bit PRNG seeded from
    ``hash(seed, device)``; the first ``round(n * train_frac)`` go to train
    (round half up). Identical inputs and seed always produce the same split.
    """
    if not 0.0 < train_frac < 1.0:
        raise ValidationError(f"train_frac must be in (0, 1), got {train_frac}")
    if not aset.images:
        raise ValidationError("cannot split an empty annotation set")

    by_device: dict[str, list[AnnotatedImage]] = {}
    for img in aset.images:
        by_device.setdefault(img.device, []).append(img)

    train: list[AnnotatedImage] = []
    test: list[AnnotatedImage] = []
    for device in sorted(by_device):
        imgs = sorted(by_device[device], key=lambda im: im.file)
        shuffled = fisher_yates(imgs, derived_rng(seed, device))
        n_train = round_half_up(len(shuffled) * train_frac)
        train.extend(shuffled[:n_train])
        test.extend(shuffled[n_train:])

    train.sort(key=lambda im: im.file)
    test.sort(key=lambda im: im.file)
    return SplitResult(train=AnnotationSet(images=tuple(train)),
                       test=AnnotationSet(images=tuple(test)),
                       seed=seed)


# ---------------------------------------------------------------------------
# Dataset statistics

def class_histogram(aset: AnnotationSet) -> list[int]:
    """Digit occurrence counts indexed by class 0..9."""
    counts = [0] * N_CLASSES
    for img in aset.images:
        for d in img.digits:
            counts[d.label] += 1
    return counts


def aspect_histogram(aset: AnnotationSet, bin_width: float = 0.1) -> dict[float, int]:
    """Counts of ground-truth box aspect ratios binned into [k*w, (k+1)*w).

    Keys are bin left edges. A tiny epsilon keeps ratios that sit exactly on
    a bin edge in the upper bin despite float rounding.
    """
    if bin_width <= 0:
        raise ValidationError(f"bin_width must be positive, got {bin_width}")
    bins: dict[float, int] = {}
    for img in aset.images:
        for d in img.digits:
            ratio = aspect_ratio(d.box)
            k = math.floor(ratio / bin_width + 1e-9)
            edge = round(k * bin_width, 10)
            bins[edge] = bins.get(edge, 0) + 1
    return dict(sorted(bins.items()))


def rename_image(img: AnnotatedImage, file: str) -> AnnotatedImage:
    return replace(img, file=file)
