"""Command line entry point: one binary, one subcommand per workflow.

Exit codes: 0 success, 1 validation/usage error, 2 I/O error. Machine output
is JSON; plot-style data (threshold sweeps, histograms, confusion counts) is
CSV. Randomized subcommands require an explicit --seed so every artifact is
reproducible. ``--jobs`` (or the SEVSEG_JOBS environment variable) caps
worker threads; results never depend on the worker count.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

from . import anchors as anchors_mod
from . import assembly, augment, data, detector, metrics, postprocess, preprocess, synth
from ._util import map_jobs
from .errors import SevsegError

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg"}


class _UsageError(Exception):
    def __init__(self, parser: argparse.ArgumentParser, message: str):
        super().__init__(message)
        self.parser = parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on bad usage, not argparse's default 2
        raise _UsageError(self, message)


def _fmt(v: float) -> str:
    return f"{v:.6f}"


def _build_parser() -> _Parser:
    parser = _Parser(prog="sevseg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    def add(name: str, help_: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_)
        p.add_argument("--jobs", type=int, default=0,
                       help="worker threads (default: SEVSEG_JOBS or 1)")
        return p

    p = add("synth", "generate a synthetic display corpus with ground truth")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--rows-min", type=int, default=1)
    p.add_argument("--rows-max", type=int, default=3)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--slant", type=float, default=0.0,
                   help="max lean in degrees; drawn uniformly in [-slant, +slant]")
    p.add_argument("--polarity", choices=["mixed", "light-on-dark", "dark-on-light"],
                   default="mixed")
    p.add_argument("--digit-weights", default=None,
                   help="comma-separated draw weights for digits 0..9")
    p.add_argument("--width", type=int, default=320)
    p.add_argument("--height", type=int, default=240)

    p = add("split", "per-device train/test partition of an annotation file")
    p.add_argument("--annotations", required=True)
    p.add_argument("--train-frac", type=float, default=0.8)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out-train", required=True)
    p.add_argument("--out-test", required=True)

    p = add("augment", "write augmented copies of an annotated image corpus")
    p.add_argument("--annotations", required=True)
    p.add_argument("--images", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--copies", type=int, default=1)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--preset", choices=["full", "lite"], default="full")
    p.add_argument("--jitter", type=float, default=0.05)

    p = add("detect", "run the reference detector over images")
    p.add_argument("--images", required=True, help="an image file or a directory")
    p.add_argument("--out", required=True)
    p.add_argument("--threshold", type=float, default=0.0)
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--max-out", type=int, default=7)
    p.add_argument("--raw", action="store_true", help="skip post-processing")

    p = add("read", "read a display image and print its rows")
    p.add_argument("--image", required=True)
    p.add_argument("--threshold", type=float, default=0.0)
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--max-out", type=int, default=7)
    p.add_argument("--json", dest="json_out", default=None,
                   help="also write the reading as JSON to this path")

    p = add("eval-coco", "COCO challenge metrics for a detection file")
    p.add_argument("--gt", required=True)
    p.add_argument("--det", required=True)
    p.add_argument("--out", default=None)

    p = add("eval-det", "detection precision/recall/F1 at a score threshold")
    p.add_argument("--gt", required=True)
    p.add_argument("--det", required=True)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--model", default=None,
                   help="named architecture preset supplying the default threshold")
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--class-sensitive", action="store_true")
    p.add_argument("--out", default=None)

    p = add("sweep", "precision/recall/F1 over score thresholds 0.05..0.95")
    p.add_argument("--gt", required=True)
    p.add_argument("--det", required=True)
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--out", default=None, help="CSV output path")

    p = add("confusion", "10x10 class confusion matrix over true positives")
    p.add_argument("--gt", required=True)
    p.add_argument("--det", required=True)
    p.add_argument("--threshold", type=float, required=True)
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--out", default=None, help="CSV output path")

    p = add("anchors-report", "anchor coverage of ground-truth boxes")
    p.add_argument("--annotations", required=True)
    p.add_argument("--input-size", type=int, default=None)
    p.add_argument("--model", default=None)
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--ratios", default=None,
                   help="comma-separated aspect ratios (default 0.1,0.3,0.5,1.0,2.0)")
    p.add_argument("--out-coverage", default=None, help="per-image coverage CSV")
    p.add_argument("--out-hist", default=None, help="best-IoU histogram CSV")

    p = add("stats", "class and aspect-ratio histograms of an annotation file")
    p.add_argument("--annotations", required=True)
    p.add_argument("--bin-width", type=float, default=0.1)
    p.add_argument("--out-classes", default=None)
    p.add_argument("--out-aspects", default=None)

    return parser


def _n_jobs(args) -> int:
    if args.jobs and args.jobs > 0:
        return args.jobs
    env = os.environ.get("SEVSEG_JOBS", "")
    return int(env) if env.isdigit() and int(env) > 0 else 1


def _image_paths(root: Path) -> list[Path]:
    if root.is_file():
        return [root]
    if root.is_dir():
        return sorted(p for p in root.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    raise FileNotFoundError(f"no such image or directory: {root}")


def _postprocess_config(args) -> postprocess.PostprocessConfig:
    return postprocess.PostprocessConfig(score_threshold=args.threshold,
                                         iou_threshold=args.iou,
                                         max_outputs=args.max_out)


def _parse_floats(raw: str, flag: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in raw.split(","))
    except ValueError as err:
        raise SevsegError(f"{flag} expects comma-separated numbers, got {raw!r}") from err


def _cmd_synth(args) -> int:
    weights = (_parse_floats(args.digit_weights, "--digit-weights")
               if args.digit_weights else (1.0,) * 10)
    cspec = synth.CorpusSpec(
        digit_weights=weights,
        rows_range=(args.rows_min, args.rows_max),
        slant_range=(-args.slant, args.slant),
        noise_sigma=args.noise,
        polarity=args.polarity,
        width=args.width,
        height=args.height,
    )
    aset = synth.generate_corpus(args.count, cspec, args.seed, args.out)
    print(f"wrote {len(aset.images)} images with {aset.total_digits()} digits to {args.out}")
    return 0


def _cmd_split(args) -> int:
    aset = data.load_annotations(args.annotations)
    result = data.split(aset, args.train_frac, args.seed)
    data.save_annotations(result.train, args.out_train)
    data.save_annotations(result.test, args.out_test)
    print(f"train {len(result.train.images)} images / "
          f"test {len(result.test.images)} images (seed {result.seed})")
    return 0


def _cmd_augment(args) -> int:
    aset = data.load_annotations(args.annotations)
    if args.preset == "lite":
        spec = augment.AugmentSpec.lite(seed=args.seed)
    else:
        spec = augment.AugmentSpec.full(seed=args.seed)
    if args.jitter != spec.jitter_frac:
        spec = dataclasses.replace(spec, jitter_frac=args.jitter)
    out = augment.augment_dataset(aset, spec, args.copies, args.images, args.out)
    data.save_annotations(out, Path(args.out) / "annotations.json")
    print(f"wrote {len(out.images)} augmented images to {args.out}")
    return 0


def _cmd_detect(args) -> int:
    paths = _image_paths(Path(args.images))
    config = _postprocess_config(args)

    def process(path: Path) -> data.DetectionImage:
        img = preprocess.load_image(path)
        dets = detector.detect(img)
        if not args.raw:
            dets = postprocess.postprocess(dets, config)
        return data.DetectionImage(file=path.name, width=img.shape[1],
                                   height=img.shape[0], detections=tuple(dets))
    images = map_jobs(process, paths, _n_jobs(args))
    dset = data.DetectionSet(images=tuple(images))
    data.save_detections(dset, args.out)
    total = sum(len(im.detections) for im in images)
    print(f"wrote {total} detections over {len(images)} images to {args.out}")
    return 0


def _cmd_read(args) -> int:
    img = preprocess.load_image(args.image)
    dets = postprocess.postprocess(detector.detect(img), _postprocess_config(args))
    reading = assembly.assemble(dets)
    for row in reading.rows:
        print(row.digits)
    if args.json_out:
        payload = {"rows": [{"digits": r.digits, "value": r.value} for r in reading.rows]}
        Path(args.json_out).write_text(json.dumps(payload, indent=2) + "\n",
                                       encoding="utf-8")
    return 0


def _cmd_eval_coco(args) -> int:
    report = metrics.coco_report(data.load_annotations(args.gt),
                                 data.load_detections(args.det))
    print(f"mAP {_fmt(report.map)}  AP50 {_fmt(report.ap50)}  AP75 {_fmt(report.ap75)}  "
          f"AR1 {_fmt(report.ar1)}  AR10 {_fmt(report.ar10)}")
    if args.out:
        Path(args.out).write_text(json.dumps(report.as_dict(), indent=2) + "\n",
                                  encoding="utf-8")
    return 0


def _cmd_eval_det(args) -> int:
    threshold = args.threshold
    if threshold is None:
        threshold = (postprocess.default_threshold_for(args.model)
                     if args.model else 0.5)
    report = metrics.prf(data.load_annotations(args.gt), data.load_detections(args.det),
                         threshold, args.iou, class_sensitive=args.class_sensitive)
    print(f"threshold {threshold:.2f}  tp {report.tp}  fp {report.fp}  fn {report.fn}  "
          f"precision {_fmt(report.precision)}  recall {_fmt(report.recall)}  "
          f"f1 {_fmt(report.f1)}")
    if args.out:
        payload = {"threshold": threshold, "tp": report.tp, "fp": report.fp,
                   "fn": report.fn, "precision": report.precision,
                   "recall": report.recall, "f1": report.f1}
        Path(args.out).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    return 0


def sweep_csv(result: metrics.SweepResult) -> str:
    lines = ["threshold,precision,recall,f1"]
    for row in result.rows:
        r = row.report
        lines.append(f"{row.threshold:.2f},{_fmt(r.precision)},{_fmt(r.recall)},{_fmt(r.f1)}")
    return "\n".join(lines) + "\n"


def _cmd_sweep(args) -> int:
    result = metrics.sweep(data.load_annotations(args.gt), data.load_detections(args.det),
                           iou_threshold=args.iou)
    if args.out:
        Path(args.out).write_text(sweep_csv(result), encoding="utf-8")
    else:
        sys.stdout.write(sweep_csv(result))
    best = result.best
    print(f"optimal threshold {best.threshold:.2f} (F1 {_fmt(best.report.f1)})")
    return 0


def confusion_csv(matrix: metrics.ConfusionMatrix) -> str:
    lines = ["," + ",".join(str(c) for c in range(10))]
    for true_class, row in enumerate(matrix.counts):
        lines.append(f"{true_class}," + ",".join(str(v) for v in row))
    return "\n".join(lines) + "\n"


def _cmd_confusion(args) -> int:
    matrix = metrics.confusion(data.load_annotations(args.gt),
                               data.load_detections(args.det),
                               args.threshold, args.iou)
    if args.out:
        Path(args.out).write_text(confusion_csv(matrix), encoding="utf-8")
    else:
        sys.stdout.write(confusion_csv(matrix))
    print(f"true positives {matrix.total}  correct {matrix.trace}  "
          f"accuracy {_fmt(matrix.accuracy)}")
    return 0


def _cmd_anchors_report(args) -> int:
    if args.input_size is None and args.model is None:
        raise SevsegError("anchors-report needs --input-size or --model")
    size = args.input_size or preprocess.input_size_for(args.model)
    ratios = (tuple(sorted(_parse_floats(args.ratios, "--ratios")))
              if args.ratios else anchors_mod.DEFAULT_ASPECT_RATIOS)
    config = anchors_mod.AnchorConfig(input_size=size, aspect_ratios=ratios)
    grid = anchors_mod.generate(config)
    report = anchors_mod.coverage_report(grid, data.load_annotations(args.annotations),
                                         args.iou)
    if args.out_coverage:
        lines = ["file,digits,matched,coverage"]
        for c in report.per_image:
            frac = 1.0 if c.n_digits == 0 else c.n_matched / c.n_digits
            lines.append(f"{c.file},{c.n_digits},{c.n_matched},{_fmt(frac)}")
        Path(args.out_coverage).write_text("\n".join(lines) + "\n", encoding="utf-8")
    if args.out_hist:
        edges = [i * 0.05 for i in range(20)]
        lines = ["bin_left,count"]
        for i, edge in enumerate(edges):
            hi = edge + 0.05 if i < 19 else 1.0 + 1e-9
            n = int(((report.best_ious >= edge) & (report.best_ious < hi)).sum())
            lines.append(f"{edge:.2f},{n}")
        Path(args.out_hist).write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"anchors {len(grid)}  gt boxes {report.total_digits}  "
          f"matched {report.total_matched}  coverage {_fmt(report.coverage)} "
          f"at IoU {args.iou:.2f}")
    return 0


def _cmd_stats(args) -> int:
    aset = data.load_annotations(args.annotations)
    counts = data.class_histogram(aset)
    aspects = data.aspect_histogram(aset, args.bin_width)
    if args.out_classes:
        lines = ["class,count"] + [f"{c},{counts[c]}" for c in range(10)]
        Path(args.out_classes).write_text("\n".join(lines) + "\n", encoding="utf-8")
    if args.out_aspects:
        lines = ["bin_left,count"] + [f"{edge},{n}" for edge, n in aspects.items()]
        Path(args.out_aspects).write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"images {len(aset.images)}  digits {aset.total_digits()}")
    for c in range(10):
        print(f"digit {c}: {counts[c]}")
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "split": _cmd_split,
    "augment": _cmd_augment,
    "detect": _cmd_detect,
    "read": _cmd_read,
    "eval-coco": _cmd_eval_coco,
    "eval-det": _cmd_eval_det,
    "sweep": _cmd_sweep,
    "confusion": _cmd_confusion,
    "anchors-report": _cmd_anchors_report,
    "stats": _cmd_stats,
}


def run(argv: list[str]) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            parser.print_usage(sys.stderr)
            return 1
        return _COMMANDS[args.command](args)
    except _UsageError as err:
        err.parser.print_usage(sys.stderr)
        print(f"error: {err}", file=sys.stderr)
        return 1
    except SevsegError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
